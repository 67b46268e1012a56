#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpc/backends/backend.hpp"
#include "gpc/bench/config.hpp"
#include "gpc/bench/metrics.hpp"

namespace gpc::bench {

struct SweepOutcome {
    std::size_t rows = 0;
    std::vector<std::string> failed_cells; // backend startup or batch failures
};

/// Seed of population `index` in a (problem, pop size) cell. Independent of
/// the backend so every backend sees the same populations.
std::uint64_t population_seed(std::uint64_t base, problems::ProblemKind kind, std::size_t pop_size, std::size_t index);

/// Runs every (problem, backend, pop size) cell: `populations` fresh
/// populations of `generations` generations each, one CSV row per
/// generation. A cell whose backend fails is recorded and skipped.
SweepOutcome run_sweep(const SweepConfig& cfg, const backends::BackendOptions& opts, std::ostream* log = nullptr);

} // namespace gpc::bench
