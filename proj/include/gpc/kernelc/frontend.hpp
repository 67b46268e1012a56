#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gpc/kernelc/ast.hpp"

namespace gpc::kernelc {

class CompileError : public std::runtime_error {
public:
    enum class Kind { syntax, type, undefined, unknown_intrinsic, entry_mismatch, internal };

    CompileError(Kind kind, std::string entry, SourceLoc loc, const std::string& message);

    Kind kind() const { return kind_; }
    const std::string& entry() const { return entry_; }
    SourceLoc loc() const { return loc_; }

private:
    Kind kind_;
    std::string entry_;
    SourceLoc loc_;
};

/// Lexes, parses and type-checks a translation unit.
///
/// Unit grammar:
///
///     unit   := (buffer | entry)*
///     buffer := ('__in' | '__out') type NAME '[' ']' ';'
///     entry  := '__entry' NAME '(' ')' block
///
/// Statements are C-like: declarations, assignment (`=`, `+=`, `-=`,
/// `*=`, `++`, `--`), `if`/`else`, `for`, `while`, `break`, `continue`,
/// `return expr;` and `out[tid] = expr;` where `out` is the single `__out`
/// buffer. The result carries resolved local ids, buffer slots and explicit
/// conversion nodes, so later passes never re-derive types.
Program parse_program(std::string_view source);

/// Names following each `__entry` keyword, in order. A cheap textual scan
/// for callers that receive bare source text.
std::vector<std::string> scan_entry_names(std::string_view source);

} // namespace gpc::kernelc
