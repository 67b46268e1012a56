#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gpc/kernelc/ast.hpp"
#include "gpc/kernelc/frontend.hpp"
#include "gpc/kernelc/ir.hpp"
#include "gpc/kernelc/module.hpp"

namespace gpc::kernelc {

/// One translation unit. `entry_names` must list the unit's `__entry`
/// declarations in order.
struct SourceUnit {
    std::string text;
    std::vector<std::string> entry_names;
};

struct CompileOptions {
    bool constant_folding = true;
    bool bounds_check = true;

    std::string fingerprint() const;
    friend bool operator==(const CompileOptions&, const CompileOptions&) = default;
};

/// Textual stage-one output, the analog of PTX.
struct StageOneIR {
    std::string text;
    friend bool operator==(const StageOneIR&, const StageOneIR&) = default;
};

struct CompileTimings {
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
};

using Clock = std::chrono::steady_clock;

struct IrResult {
    StageOneIR ir;
    double stage1_ms = 0.0;
    Clock::time_point guard_entered;
    Clock::time_point guard_left;
};

struct CodegenLimits {
    unsigned max_registers = 64; // at most 256
    unsigned max_spill_slots = 4096;
};

class CodegenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModuleResult {
    ModuleBinary module;
    std::vector<std::byte> bytes;
    double stage2_ms = 0.0;
};

// The compiler keeps process-wide options and a single exclusive guard,
// like the in-process library it models. set_options and compile_to_ir
// both take the guard, so concurrent callers run one at a time.

/// Installs `opts` for later compile_to_ir calls and returns the previous
/// options.
CompileOptions set_options(const CompileOptions& opts);
CompileOptions current_options();

/// Stage one: source -> IR text. Throws CompileError.
IrResult compile_to_ir(const SourceUnit& src);

/// Stage two: IR text -> register-allocated, encoded module. Throws
/// IrFormatError or CodegenError.
ModuleResult ir_to_module(const StageOneIR& ir, const CodegenLimits& limits = {});

struct CompiledUnit {
    ModuleBinary module;
    std::vector<std::byte> bytes;
    CompileTimings timings;
};

/// Both stages back to back.
CompiledUnit compile_unit(const SourceUnit& src);

struct GuardStats {
    int max_concurrent = 0;
    std::uint64_t acquisitions = 0;
};

GuardStats guard_stats();
void reset_guard_stats();

// Building blocks used by the stages, exposed for tests.
IrModule lower_program(const Program& prog, const CompileOptions& opts);
ModuleBinary generate_module(const IrModule& ir, const CodegenLimits& limits);

} // namespace gpc::kernelc
