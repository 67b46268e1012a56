#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gpc/buffers.hpp"
#include "gpc/grammar.hpp"
#include "gpc/kernelc/compiler.hpp"
#include "gpc/vm.hpp"

namespace gpc::problems {

enum class ProblemKind : std::uint8_t { search, k6, mul5 };
enum class Objective : std::uint8_t { maximize, minimize };
enum class OutputSemantic : std::uint8_t { int_, float_, packed_bits };

class ProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::search;
    std::string name;
    grammar::Grammar grammar;
    std::size_t case_count = 0;
    Objective objective = Objective::maximize;
    OutputSemantic output = OutputSemantic::int_;

    bool output_is_float() const { return output == OutputSemantic::float_; }
};

/// Built-in grammar text for a problem.
std::string_view builtin_grammar(ProblemKind kind);

/// Spec with the built-in grammar, or with `grammar_text` when given.
ProblemSpec make_problem(ProblemKind kind, std::optional<std::string_view> grammar_text = std::nullopt);

ProblemKind parse_problem_name(std::string_view name);
std::string_view problem_name(ProblemKind kind);

inline constexpr std::size_t search_width = 20;

struct TestSuite {
    std::vector<HostArray> inputs; // in input-slot order
    std::vector<double> expected;
    std::size_t case_count = 0;
};

/// search: 32 random cases, exactly 16 containing the target. k6: x = 1..64.
/// mul5: all 1024 operand pairs. Only search depends on the seed.
TestSuite generate_cases(const ProblemSpec& p, std::uint64_t seed);

/// Partial harmonic sum 1 + 1/2 + ... + 1/x, summed in increasing order.
double k6_target(std::int64_t x);

std::uint32_t mul5_pack(std::uint32_t a, std::uint32_t b);

struct Score {
    double value = 0.0;
    bool valid = true;
    friend bool operator==(const Score&, const Score&) = default;
};

Score worst_score(const ProblemSpec& p);

/// True when `a` is strictly better than `b`. Valid beats invalid.
bool better(const ProblemSpec& p, const Score& a, const Score& b);

/// Scores one individual's outputs. A budget-exhausted case makes the
/// individual invalid, as does any non-finite k6 output.
Score fitness(const ProblemSpec& p, std::span<const double> outputs, const TestSuite& suite,
              std::span<const vm::ThreadStatus> status = {});

std::string entry_name(std::size_t index);

/// One translation unit holding entries ind_<first_index> onward, one per
/// phenotype, in order.
kernelc::SourceUnit emit_batch_source(const ProblemSpec& p, std::span<const std::string> phenotypes,
                                      std::size_t first_index = 0);
/// As above, naming entry i `ind_<indices[i]>`.
kernelc::SourceUnit emit_batch_source(const ProblemSpec& p, std::span<const std::string> phenotypes,
                                      std::span<const std::size_t> indices);

/// A hand-written correct program for the problem, as a one-entry unit.
kernelc::SourceUnit known_solution(const ProblemSpec& p);

/// One CSV row per case: inputs (wide arrays expanded per column) then the
/// expected value.
void write_suite_csv(const ProblemSpec& p, const TestSuite& suite, std::ostream& os);

} // namespace gpc::problems
