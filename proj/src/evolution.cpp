#include "gpc/evolution.hpp"

#include <algorithm>
#include <chrono>

namespace gpc::evolution {

namespace {

using kernelc::Clock;

double ms_between(Clock::time_point a, Clock::time_point b)
{
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::size_t best_index(const problems::ProblemSpec& p, std::span<const problems::Score> fitness)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i)
        if (problems::better(p, fitness[i], fitness[best]))
            best = i;
    return best;
}

void mutate(grammar::Genotype& g, Rng& rng)
{
    std::uniform_int_distribution<std::size_t> pos(0, g.codons.size() - 1);
    std::uniform_int_distribution<std::uint32_t> val;
    auto& c = g.codons[pos(rng)];
    std::uint32_t fresh = val(rng);
    while (fresh == c)
        fresh = val(rng);
    c = fresh;
}

} // namespace

void EvolutionParams::validate() const
{
    if (population_size < 2)
        throw ParamError("population_size must be at least 2");
    if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 || mutation_rate > 1.0)
        throw ParamError("rates must lie in [0, 1]");
    if (tournament_size < 1)
        throw ParamError("tournament_size must be at least 1");
    if (min_init_length < 1 || min_init_length > max_init_length || max_init_length > max_length)
        throw ParamError("codon lengths need 1 <= min_init_length <= max_init_length <= max_length");
    if (elites > population_size)
        throw ParamError("elites exceed population_size");
}

Population init_population(const EvolutionParams& params)
{
    params.validate();
    Rng rng(params.seed);
    std::uniform_int_distribution<std::size_t> len(params.min_init_length, params.max_init_length);
    Population pop;
    pop.individuals.reserve(params.population_size);
    for (std::size_t i = 0; i < params.population_size; ++i) {
        std::size_t n = len(rng);
        pop.individuals.push_back(grammar::random_genotype(rng(), n));
    }
    return pop;
}

std::size_t select_tournament(const problems::ProblemSpec& p, std::span<const problems::Score> fitness,
                              std::size_t k, Rng& rng)
{
    if (fitness.empty())
        throw ParamError("tournament over an empty population");
    if (k == 0)
        throw ParamError("tournament size must be at least 1");
    std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
    std::size_t winner = pick(rng);
    for (std::size_t i = 1; i < k; ++i) {
        std::size_t c = pick(rng);
        if (problems::better(p, fitness[c], fitness[winner])
            || (c < winner && !problems::better(p, fitness[winner], fitness[c])))
            winner = c;
    }
    return winner;
}

std::pair<grammar::Genotype, grammar::Genotype> breed(const grammar::Genotype& a, const grammar::Genotype& b,
                                                      const EvolutionParams& params, Rng& rng)
{
    if (a.codons.empty() || b.codons.empty())
        throw ParamError("cannot breed an empty genotype");
    std::bernoulli_distribution cross(params.crossover_rate);
    std::bernoulli_distribution mut(params.mutation_rate);

    grammar::Genotype ca = a;
    grammar::Genotype cb = b;
    if (cross(rng)) {
        // Cut points leave each suffix non-empty, so children keep at least
        // one codon.
        std::size_t pa = std::uniform_int_distribution<std::size_t>(0, a.codons.size() - 1)(rng);
        std::size_t pb = std::uniform_int_distribution<std::size_t>(0, b.codons.size() - 1)(rng);
        ca.codons.assign(a.codons.begin(), a.codons.begin() + static_cast<std::ptrdiff_t>(pa));
        ca.codons.insert(ca.codons.end(), b.codons.begin() + static_cast<std::ptrdiff_t>(pb), b.codons.end());
        cb.codons.assign(b.codons.begin(), b.codons.begin() + static_cast<std::ptrdiff_t>(pb));
        cb.codons.insert(cb.codons.end(), a.codons.begin() + static_cast<std::ptrdiff_t>(pa), a.codons.end());
    }
    for (auto* c : {&ca, &cb}) {
        if (c->codons.size() > params.max_length)
            c->codons.resize(params.max_length);
        if (mut(rng))
            mutate(*c, rng);
    }
    return {std::move(ca), std::move(cb)};
}

Evaluation evaluate(const Population& pop, const problems::ProblemSpec& p, backends::Backend& backend,
                    const problems::TestSuite& suite, const EvolutionParams& params)
{
    Evaluation ev;
    const std::size_t n = pop.individuals.size();
    ev.fitness.assign(n, problems::worst_score(p));

    std::vector<std::string> phenos;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        auto d = grammar::derive(p.grammar, pop.individuals[i], params.wrap_limit);
        if (!d.completed)
            continue;
        phenos.push_back(std::move(d.phenotype));
        index.push_back(i);
    }
    ev.valid_count = phenos.size();

    std::vector<kernelc::SourceUnit> units;
    std::size_t at = 0;
    for (std::size_t size : backends::partition(phenos.size(), backend.parallelism())) {
        if (size == 0)
            continue;
        units.push_back(problems::emit_batch_source(p, std::span(phenos).subspan(at, size),
                                                    std::span<const std::size_t>(index).subspan(at, size)));
        at += size;
    }
    ev.partitions = units.size();

    auto batch = backend.compile(units);
    ev.compile = batch.metrics;
    ev.compile.batch_size = n;

    auto out = vm::run_population(batch.modules, p, suite, params.instruction_budget);
    for (std::size_t r = 0; r < out.rows; ++r)
        ev.fitness[index[r]] = problems::fitness(p, out.row(r), suite, out.row_status(r));
    ev.modules = std::move(batch.modules);
    return ev;
}

StepResult step_generation(const Population& pop, const problems::ProblemSpec& p, backends::Backend& backend,
                           const problems::TestSuite& suite, const EvolutionParams& params, Rng& rng)
{
    auto t0 = Clock::now();
    Evaluation ev = evaluate(pop, p, backend, suite, params);

    StepResult res;
    res.next.generation = pop.generation + 1;
    auto& next = res.next.individuals;
    next.reserve(pop.individuals.size());

    // Elites first, best to worst.
    std::vector<std::size_t> order(pop.individuals.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return problems::better(p, ev.fitness[a], ev.fitness[b]); });
    for (std::size_t e = 0; e < params.elites; ++e)
        next.push_back(pop.individuals[order[e]]);
    while (next.size() < pop.individuals.size()) {
        const auto& a = pop.individuals[select_tournament(p, ev.fitness, params.tournament_size, rng)];
        const auto& b = pop.individuals[select_tournament(p, ev.fitness, params.tournament_size, rng)];
        auto [ca, cb] = breed(a, b, params, rng);
        next.push_back(std::move(ca));
        if (next.size() < pop.individuals.size())
            next.push_back(std::move(cb));
    }
    auto t1 = Clock::now();

    GenerationReport& r = res.report;
    r.generation = pop.generation;
    r.population_size = pop.individuals.size();
    r.partitions = ev.partitions;
    r.valid_count = ev.valid_count;
    r.total_ms = ms_between(t0, t1);
    r.ptx_ms = ev.compile.stage1_ms;
    r.jit_ms = ev.compile.stage2_ms;
    r.other_ms = std::max(0.0, r.total_ms - (r.ptx_ms + r.jit_ms));
    auto n = static_cast<double>(r.population_size);
    r.ptx_ms_per_ind = r.ptx_ms / n;
    r.jit_ms_per_ind = r.jit_ms / n;
    r.other_ms_per_ind = r.other_ms / n;
    r.best = ev.fitness[best_index(p, ev.fitness)];
    double sum = 0.0;
    std::size_t valid = 0;
    for (const auto& s : ev.fitness)
        if (s.valid) {
            sum += s.value;
            ++valid;
        }
    r.mean_fitness = valid ? sum / static_cast<double>(valid) : problems::worst_score(p).value;
    res.fitness = std::move(ev.fitness);
    return res;
}

} // namespace gpc::evolution
