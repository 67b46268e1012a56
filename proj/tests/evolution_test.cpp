#include <doctest.h>

#include <cmath>

#include "gpc/evolution.hpp"

using namespace gpc;
using namespace gpc::evolution;
using problems::Score;

namespace {

backends::BackendOptions opts()
{
    backends::BackendOptions o;
    o.executable = GPCOMP_EXE;
    return o;
}

} // namespace

TEST_CASE("init_population")
{
    EvolutionParams p;
    p.population_size = 20;
    auto a = init_population(p);
    CHECK(a.individuals.size() == 20);
    CHECK(init_population(p).individuals == a.individuals);
    for (const auto& g : a.individuals) {
        CHECK(g.codons.size() >= p.min_init_length);
        CHECK(g.codons.size() <= p.max_init_length);
    }
    p.population_size = 1;
    CHECK_THROWS_AS(init_population(p), ParamError);
    p.population_size = 10;
    p.crossover_rate = 1.5;
    CHECK_THROWS_AS(p.validate(), ParamError);
}

TEST_CASE("tournament selection")
{
    auto p = problems::make_problem(problems::ProblemKind::search);
    std::vector<Score> f = {{3, true}, {9, true}, {1, true}, {9, true}, {30, false}};
    Rng rng(1);
    for (int i = 0; i < 50; ++i)
        CHECK(select_tournament(p, f, 400, rng) == 1);

    std::vector<Score> tie = {{5, true}, {5, true}};
    for (int i = 0; i < 50; ++i) {
        // With both drawn the lower index must win; a single-draw pick is either.
        auto w = select_tournament(p, tie, 64, rng);
        CHECK(w == 0);
    }

    std::vector<std::size_t> hits(f.size());
    for (int i = 0; i < 5000; ++i)
        ++hits[select_tournament(p, f, 1, rng)];
    for (auto h : hits)
        CHECK(h > 800);

    // Invalid individuals lose to any valid one.
    std::vector<Score> mixed = {{0, false}, {1, true}};
    for (int i = 0; i < 50; ++i)
        CHECK(select_tournament(p, mixed, 64, rng) == 1);
}

TEST_CASE("breed identity and mutation")
{
    EvolutionParams p;
    p.crossover_rate = 0;
    p.mutation_rate = 0;
    grammar::Genotype a{{1, 2, 3, 4}}, b{{9, 8, 7}};
    Rng rng(3);
    auto [c, d] = breed(a, b, p, rng);
    CHECK(c == a);
    CHECK(d == b);

    p.mutation_rate = 1;
    for (int i = 0; i < 100; ++i) {
        auto [m, n] = breed(a, b, p, rng);
        REQUIRE(m.codons.size() == a.codons.size());
        int diff = 0;
        for (std::size_t j = 0; j < a.codons.size(); ++j)
            diff += m.codons[j] != a.codons[j];
        CHECK(diff == 1);
    }
}

TEST_CASE("crossover splices suffixes and respects max length")
{
    EvolutionParams p;
    p.crossover_rate = 1;
    p.mutation_rate = 0;
    p.max_length = 6;
    grammar::Genotype a{{1, 1, 1, 1, 1}}, b{{2, 2, 2, 2, 2}};
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        auto [c, d] = breed(a, b, p, rng);
        for (const auto* g : {&c, &d}) {
            CHECK(!g->codons.empty());
            CHECK(g->codons.size() <= 6);
        }
        // A child is a prefix of one parent followed by a suffix of the other.
        CHECK(std::is_sorted(c.codons.begin(), c.codons.end()));
        CHECK(std::is_sorted(d.codons.rbegin(), d.codons.rend()));
        CHECK(c.codons.back() == 2);
        CHECK(d.codons.back() == 1);
    }
}

TEST_CASE("step_generation decomposition and elitism")
{
    auto p = problems::make_problem(problems::ProblemKind::k6);
    auto suite = problems::generate_cases(p, 1);
    EvolutionParams params;
    params.population_size = 50;
    auto pop = init_population(params);
    auto in = backends::make_backend(backends::BackendKind::in_process());
    Rng rng(2);
    Score best = problems::worst_score(p);
    for (int g = 0; g < 5; ++g) {
        auto s = step_generation(pop, p, *in, suite, params, rng);
        const auto& r = s.report;
        CHECK(std::fabs(r.ptx_ms + r.jit_ms + r.other_ms - r.total_ms) <= 1.0);
        CHECK(r.population_size == 50);
        CHECK_FALSE(problems::better(p, best, r.best));
        best = r.best;
        CHECK(s.next.individuals.size() == 50);
        for (const auto& gen : s.next.individuals)
            CHECK(gen.codons.size() <= params.max_length);
        pop = std::move(s.next);
    }
}

TEST_CASE("runs are identical across backends")
{
    auto p = problems::make_problem(problems::ProblemKind::search);
    auto suite = problems::generate_cases(p, 1);
    EvolutionParams params;
    params.population_size = 300;
    auto pop = init_population(params);

    auto run = [&](backends::BackendKind kind) {
        auto b = backends::make_backend(kind, opts());
        Rng rng(5);
        auto cur = pop;
        std::vector<std::vector<Score>> fits;
        std::size_t partitions = 0;
        for (int g = 0; g < 2; ++g) {
            auto s = step_generation(cur, p, *b, suite, params, rng);
            fits.push_back(s.fitness);
            partitions = s.report.partitions;
            cur = std::move(s.next);
        }
        return std::pair{fits, partitions};
    };
    auto [ref, one] = run(backends::BackendKind::in_process());
    CHECK(one == 1);
    auto [pool, eight] = run(backends::BackendKind::daemon_pool(8));
    CHECK(eight == 8);
    CHECK(pool == ref);
}
