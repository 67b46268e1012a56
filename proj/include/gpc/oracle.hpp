#pragma once

#include <cstdint>
#include <string>

#include "gpc/problems.hpp"

namespace gpc::oracle {

struct OracleReport {
    std::size_t individuals = 0;
    std::size_t cases_compared = 0;
    std::size_t budget_skipped = 0; // VM ran out of budget; any outcome accepted
    std::size_t mismatches = 0;
    std::string first_mismatch;

    bool passed() const { return mismatches == 0 && individuals > 0; }
};

/// Compiles `count` random completed individuals in one unit, runs them on
/// the VM and replays every case through the AST interpreter on the same
/// padded buffers. VM ok needs an equal interpreter value (ints exact,
/// floats within relative 1e-9); a VM fault needs an interpreter fault.
OracleReport check_oracle(const problems::ProblemSpec& p, const problems::TestSuite& suite, std::size_t count,
                          std::uint64_t seed, std::uint64_t budget = vm::default_instruction_budget);

/// True when a and b agree to relative 1e-9; NaNs agree with NaNs.
bool floats_agree(double a, double b);

} // namespace gpc::oracle
