#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpc/backends/backend.hpp"
#include "gpc/evolution.hpp"
#include "gpc/problems.hpp"

namespace gpc::bench {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
    std::vector<problems::ProblemKind> problems;
    std::vector<backends::BackendKind> backends;
    std::vector<std::size_t> pop_sizes;
    std::size_t populations = 15;
    std::size_t generations = 10;
    std::uint64_t seed = 1;
    evolution::EvolutionParams evolution; // population_size and seed are set per cell
    std::map<problems::ProblemKind, std::filesystem::path> grammar_paths;
    std::filesystem::path out = "metrics.csv";

    /// Full sweep: pop sizes 20..300 step 20, 15 populations x 10
    /// generations, in/out-of-process and 2/4/6/8 daemons.
    static SweepConfig full();
    /// Pop sizes {20, 100, 300}, 3 populations x 3 generations.
    static SweepConfig quick();

    /// Throws UsageError.
    void validate() const;
};

/// Overrides fields of `base` with the keys present in a JSON document.
/// Unknown keys are rejected.
SweepConfig config_from_json(std::string_view json_text, SweepConfig base);
SweepConfig load_config(const std::filesystem::path& path, SweepConfig base);

/// Problem spec, with the grammar file from the config when one is set.
problems::ProblemSpec load_problem(const SweepConfig& cfg, problems::ProblemKind kind);

} // namespace gpc::bench
