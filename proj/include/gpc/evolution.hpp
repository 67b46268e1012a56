#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gpc/backends/backend.hpp"
#include "gpc/grammar.hpp"
#include "gpc/problems.hpp"

namespace gpc::evolution {

class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EvolutionParams {
    std::size_t population_size = 20;
    double crossover_rate = 0.7;
    double mutation_rate = 0.7;
    std::size_t tournament_size = 3;
    std::size_t min_init_length = 20;
    std::size_t max_init_length = 100;
    std::size_t max_length = 400;
    std::size_t wrap_limit = grammar::default_wrap_limit;
    std::size_t elites = 1;
    std::uint64_t instruction_budget = vm::default_instruction_budget;
    std::uint64_t seed = 1;

    /// Throws ParamError.
    void validate() const;
};

using Rng = std::mt19937_64;

struct Population {
    std::vector<grammar::Genotype> individuals;
    std::size_t generation = 0;
};

Population init_population(const EvolutionParams& params);

/// Index of the best of k uniform draws (with replacement). Ties go to the
/// lower index; valid beats invalid.
std::size_t select_tournament(const problems::ProblemSpec& p, std::span<const problems::Score> fitness,
                              std::size_t k, Rng& rng);

/// Single-point variable-length crossover, then single-codon mutation per
/// child.
std::pair<grammar::Genotype, grammar::Genotype> breed(const grammar::Genotype& a, const grammar::Genotype& b,
                                                      const EvolutionParams& params, Rng& rng);

struct Evaluation {
    std::vector<problems::Score> fitness;
    backends::CompileMetrics compile;
    std::size_t valid_count = 0;  // completed derivations
    std::size_t partitions = 0;   // source units compiled
    std::vector<kernelc::ModuleBinary> modules;
};

/// Derives, compiles through `backend` and scores every individual.
/// Incomplete derivations are not compiled and score worst.
Evaluation evaluate(const Population& pop, const problems::ProblemSpec& p, backends::Backend& backend,
                    const problems::TestSuite& suite, const EvolutionParams& params);

struct GenerationReport {
    std::size_t generation = 0;
    std::size_t population_size = 0;
    std::size_t partitions = 0;
    double ptx_ms = 0.0; // totals for the generation
    double jit_ms = 0.0;
    double other_ms = 0.0;
    double total_ms = 0.0;
    double ptx_ms_per_ind = 0.0;
    double jit_ms_per_ind = 0.0;
    double other_ms_per_ind = 0.0;
    problems::Score best;
    double mean_fitness = 0.0; // over valid individuals
    std::size_t valid_count = 0;
};

struct StepResult {
    Population next;
    GenerationReport report;
    std::vector<problems::Score> fitness; // of the input population
};

/// One full GP cycle with generational replacement and elitism. Backend
/// errors propagate; the caller's population is untouched.
StepResult step_generation(const Population& pop, const problems::ProblemSpec& p, backends::Backend& backend,
                           const problems::TestSuite& suite, const EvolutionParams& params, Rng& rng);

} // namespace gpc::evolution
