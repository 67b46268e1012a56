// Acceptance suite: one line per criterion.
//
// Criteria 4 to 6 compare wall-clock timings whose outcome depends on the
// host (core count, load, clock drift). They are measured and printed like
// the rest but do not set the exit status. Criterion 5 is skipped below
// four cores.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <signal.h>

#include "gpc/backends/daemon.hpp"
#include "gpc/evolution.hpp"
#include "gpc/oracle.hpp"

using namespace gpc;
using problems::ProblemKind;
using Clock = std::chrono::steady_clock;

namespace {

const ProblemKind all_problems[] = {ProblemKind::search, ProblemKind::k6, ProblemKind::mul5};

enum class Verdict { pass, fail, skip };

struct Result {
    Verdict verdict = Verdict::fail;
    std::string detail;
    bool gating = true;
};

unsigned cores()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

backends::BackendOptions options()
{
    backends::BackendOptions o;
    o.executable = GPCOMP_EXE;
    return o;
}

double elapsed_s(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Result pass_if(bool ok, std::string detail)
{
    return {ok ? Verdict::pass : Verdict::fail, std::move(detail)};
}

evolution::EvolutionParams params_for(std::size_t pop, std::uint64_t seed)
{
    evolution::EvolutionParams p;
    p.population_size = pop;
    p.seed = seed;
    return p;
}

// Mean per-individual compile time of one backend over `reps` fresh
// populations. The same populations are used for every backend.
double per_individual_ms(backends::Backend& b, const problems::ProblemSpec& p, const problems::TestSuite& suite,
                         std::size_t pop, int reps)
{
    double sum = 0;
    for (int r = 0; r < reps; ++r) {
        auto params = params_for(pop, 1000 + static_cast<std::uint64_t>(r));
        auto ev = evolution::evaluate(evolution::init_population(params), p, b, suite, params);
        sum += ev.compile.total_ms() / static_cast<double>(ev.compile.batch_size);
    }
    return sum / reps;
}

Result oracle_equivalence()
{
    auto t0 = Clock::now();
    std::string detail;
    bool ok = true;
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto rep = oracle::check_oracle(p, problems::generate_cases(p, 1), 1000, 1);
        ok &= rep.passed() && rep.individuals == 1000;
        detail += p.name + " " + std::to_string(rep.mismatches) + "/" + std::to_string(rep.cases_compared)
                  + " mismatches; ";
        if (!rep.first_mismatch.empty())
            detail += "first: " + rep.first_mismatch + "; ";
    }
    double s = elapsed_s(t0);
    detail += fmt("%.1f s", s);
    return pass_if(ok && s < 180, detail);
}

Result backend_equivalence()
{
    std::vector<backends::BackendKind> kinds = {backends::BackendKind::in_process(),
                                                backends::BackendKind::out_of_process(),
                                                backends::BackendKind::daemon_pool(2),
                                                backends::BackendKind::daemon_pool(4),
                                                backends::BackendKind::daemon_pool(8)};
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        auto params = params_for(300, 7);
        auto pop = evolution::init_population(params);
        std::vector<std::byte> ref_bytes;
        std::vector<problems::Score> ref_fit;
        for (const auto& bk : kinds) {
            auto b = backends::make_backend(bk, options());
            auto ev = evolution::evaluate(pop, p, *b, suite, params);
            auto bytes = kernelc::encode_module(backends::merge_modules(ev.modules));
            if (ref_bytes.empty()) {
                ref_bytes = bytes;
                ref_fit = ev.fitness;
            } else if (bytes != ref_bytes || ev.fitness != ref_fit) {
                return {Verdict::fail, p.name + ": " + bk.label() + " differs from in_process"};
            }
        }
    }
    return {Verdict::pass, "3 problems x 5 backends, population 300"};
}

Result serialization()
{
    auto p = problems::make_problem(ProblemKind::mul5);
    std::vector<std::string> ph;
    for (std::uint64_t s = 0; ph.size() < 40; ++s) {
        auto d = grammar::derive(p.grammar, grammar::random_genotype(s, 100));
        if (d.completed)
            ph.push_back(d.phenotype);
    }
    auto unit = problems::emit_batch_source(p, ph);
    kernelc::reset_guard_stats();
    std::mutex mu;
    std::vector<std::pair<Clock::time_point, Clock::time_point>> spans;
    auto t0 = Clock::now();
    std::vector<std::thread> ts;
    for (int t = 0; t < 8; ++t)
        ts.emplace_back([&] {
            for (int i = 0; i < 10; ++i) {
                auto r = kernelc::compile_to_ir(unit);
                std::lock_guard lock(mu);
                spans.emplace_back(r.guard_entered, r.guard_left);
            }
        });
    for (auto& t : ts)
        t.join();
    double wall = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    std::sort(spans.begin(), spans.end());
    bool overlap = false;
    double sum = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        sum += std::chrono::duration<double, std::milli>(spans[i].second - spans[i].first).count();
        if (i > 0 && spans[i].first < spans[i - 1].second)
            overlap = true;
    }
    auto stats = kernelc::guard_stats();
    bool ok = !overlap && stats.max_concurrent == 1 && wall >= 0.9 * sum;
    return pass_if(ok, "80 compiles on 8 threads, max inside guard " + std::to_string(stats.max_concurrent)
                           + fmt(", wall %.1f ms", wall) + fmt(" vs sum %.1f ms", sum)
                           + fmt(" (ratio %.3f)", wall / sum));
}

Result speedup_ordering()
{
    std::string detail;
    bool ok = true;
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        auto in = backends::make_backend(backends::BackendKind::in_process(), options());
        auto out = backends::make_backend(backends::BackendKind::out_of_process(), options());
        auto pool = backends::make_backend(backends::BackendKind::daemon_pool(4), options());
        double t_in = per_individual_ms(*in, p, suite, 300, 5);
        double t_out = per_individual_ms(*out, p, suite, 300, 5);
        double t_pool = per_individual_ms(*pool, p, suite, 300, 5);
        bool good = t_pool < t_in && t_in < t_out && t_out / t_in >= 1.1;
        ok &= good;
        detail += p.name + fmt(" pool4 %.4f", t_pool) + fmt(" in %.4f", t_in) + fmt(" out %.4f ms/ind", t_out)
                  + fmt(" (out/in %.2f)", t_out / t_in) + (good ? "; " : " [violated]; ");
    }
    return pass_if(ok, detail + std::to_string(cores()) + " cores");
}

Result daemon_scaling()
{
    if (cores() < 4)
        return {Verdict::skip, "needs 4 cores, have " + std::to_string(cores())};
    std::string detail;
    bool ok = true;
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        auto one = backends::make_backend(backends::BackendKind::daemon_pool(1), options());
        auto four = backends::make_backend(backends::BackendKind::daemon_pool(4), options());
        double t1 = per_individual_ms(*one, p, suite, 300, 5);
        double t4 = per_individual_ms(*four, p, suite, 300, 5);
        ok &= t4 <= 0.7 * t1;
        detail += p.name + fmt(" 4/1 = %.2f; ", t4 / t1);
    }
    return pass_if(ok, detail);
}

// Pop 20 and pop 300 see the same individuals: each 300-population is also
// compiled as 15 populations of 20, so only the batch size differs.
Result amortization()
{
    std::string detail;
    std::string worst_cell;
    double worst = 0;
    bool ok = true;
    std::vector<backends::BackendKind> kinds = {backends::BackendKind::in_process(),
                                                backends::BackendKind::out_of_process(),
                                                backends::BackendKind::daemon_pool(2),
                                                backends::BackendKind::daemon_pool(4),
                                                backends::BackendKind::daemon_pool(8)};
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        for (const auto& bk : kinds) {
            auto b = backends::make_backend(bk, options());
            double small = 0, large = 0;
            // Interleaved, alternating order, so clock drift hits both sizes alike.
            for (std::uint64_t rep = 0; rep < 10; ++rep) {
                auto params = params_for(300, 1000 + rep);
                auto pop = evolution::init_population(params);
                auto sub = params_for(20, params.seed);
                auto run_large = [&] { large += evolution::evaluate(pop, p, *b, suite, params).compile.total_ms(); };
                auto run_small = [&] {
                    for (std::size_t at = 0; at < 300; at += 20) {
                        evolution::Population part;
                        part.individuals.assign(pop.individuals.begin() + static_cast<std::ptrdiff_t>(at),
                                                pop.individuals.begin() + static_cast<std::ptrdiff_t>(at + 20));
                        small += evolution::evaluate(part, p, *b, suite, sub).compile.total_ms();
                    }
                };
                if (rep % 2) {
                    run_small();
                    run_large();
                } else {
                    run_large();
                    run_small();
                }
            }
            small /= 3000;
            large /= 3000;
            if (large > small) {
                ok = false;
                detail += p.name + "/" + bk.label() + fmt(" %.4f", large) + fmt(" > %.4f; ", small);
            }
            if (large / small > worst) {
                worst = large / small;
                worst_cell = p.name + "/" + bk.label();
            }
        }
    }
    return pass_if(ok, (ok ? "pop 300 <= pop 20 for 3 problems x 5 backends; " : detail) + "closest "
                           + worst_cell + fmt(" at pop300/pop20 = %.3f", worst));
}

Result known_solutions()
{
    auto score = [](ProblemKind kind, std::vector<double>* outputs) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        std::vector<kernelc::ModuleBinary> mods{kernelc::compile_unit(problems::known_solution(p)).module};
        auto m = vm::run_population(mods, p, suite);
        if (outputs)
            outputs->assign(m.row(0).begin(), m.row(0).end());
        return problems::fitness(p, m.row(0), suite, m.row_status(0)).value;
    };
    double search = score(ProblemKind::search, nullptr);
    double mul5 = score(ProblemKind::mul5, nullptr);
    std::vector<double> k6;
    score(ProblemKind::k6, &k6);
    // RMSE against a direct summation, independent of k6_target.
    double se = 0;
    for (int x = 1; x <= 64; ++x) {
        long double h = 0;
        for (int i = x; i >= 1; --i)
            h += 1.0L / i;
        se += std::pow(k6[static_cast<std::size_t>(x - 1)] - static_cast<double>(h), 2);
    }
    double rmse = std::sqrt(se / 64);
    bool ok = search == 32 && mul5 == 0 && rmse < 1e-9;
    return pass_if(ok, fmt("search %.0f/32", search) + fmt(", mul5 bit error %.0f", mul5) + fmt(", k6 RMSE %.3g", rmse));
}

Result k6_reference()
{
    double worst = 0;
    for (int x = 1; x <= 64; ++x) {
        long double h = 0;
        for (int i = x; i >= 1; --i)
            h += 1.0L / i;
        worst = std::max(worst, std::fabs(problems::k6_target(x) - static_cast<double>(h)));
    }
    return pass_if(worst <= 1e-12, fmt("max |diff| %.3g over x = 1..64", worst));
}

Result protocol()
{
    auto p = problems::make_problem(ProblemKind::k6);
    std::vector<std::string> ph;
    for (std::uint64_t s = 0; ph.size() < 64; ++s) {
        auto d = grammar::derive(p.grammar, grammar::random_genotype(s, 60));
        if (d.completed)
            ph.push_back(d.phenotype);
    }
    auto units_for = [&](std::size_t n, std::size_t k) {
        std::vector<kernelc::SourceUnit> units;
        std::size_t at = 0;
        for (auto sz : backends::partition(n, k)) {
            units.push_back(problems::emit_batch_source(p, std::span(ph).subspan(at, sz), at));
            at += sz;
        }
        return units;
    };

    std::mt19937 rng(99);
    std::size_t transitions = 0, illegal = 0, fuzzed = 0;
    for (unsigned k = 1; k <= 8; ++k) {
        auto pool = backends::DaemonPool::start(k, options());
        for (int b = 0; b < 125; ++b, ++fuzzed) {
            std::size_t n = rng() % (ph.size() + 1);
            pool->compile(units_for(n, 1 + rng() % k));
        }
        for (const auto& t : pool->trace()) {
            ++transitions;
            illegal += !backends::legal_transition(t.from, t.to, t.by);
        }
    }
    if (illegal)
        return {Verdict::fail, std::to_string(illegal) + " illegal transitions"};

    auto pool = backends::DaemonPool::start(4, options());
    std::size_t completed = 0;
    for (int b = 0; b < 100; ++b) {
        pool->compile(units_for(ph.size(), 4));
        ++completed;
    }
    ::kill(pool->pids()[1], SIGKILL);
    bool failed = false;
    try {
        pool->compile(units_for(ph.size(), 4));
    } catch (const backends::ProtocolError&) {
        failed = true;
    }
    bool recovered = pool->compile(units_for(ph.size(), 4)).modules.size() == 4;
    bool ok = completed == 100 && failed && pool->respawn_count() == 1 && recovered;
    return pass_if(ok, std::to_string(fuzzed) + " fuzzed batches, " + std::to_string(transitions)
                           + " legal transitions; " + std::to_string(completed)
                           + "/100 batches on 4 daemons; kill: batch failed " + (failed ? "yes" : "no")
                           + ", respawns " + std::to_string(pool->respawn_count()) + ", next batch "
                           + (recovered ? "ok" : "failed"));
}

Result partition_property()
{
    for (std::size_t n = 0; n <= 10000; ++n)
        for (std::size_t k = 1; k <= 64; ++k) {
            auto s = backends::partition(n, k);
            std::size_t sum = 0;
            for (auto v : s)
                sum += v;
            auto [lo, hi] = std::minmax_element(s.begin(), s.end());
            if (s.size() != k || sum != n || *hi - *lo > 1)
                return {Verdict::fail, "n=" + std::to_string(n) + " k=" + std::to_string(k)};
        }
    return {Verdict::pass, "n <= 10000, k <= 64"};
}

Result metric_decomposition()
{
    double worst = 0;
    std::size_t generations = 0;
    for (auto kind : all_problems) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 1);
        for (auto bk : {backends::BackendKind::in_process(), backends::BackendKind::out_of_process(),
                        backends::BackendKind::daemon_pool(4)}) {
            auto b = backends::make_backend(bk, options());
            auto params = params_for(100, 3);
            auto pop = evolution::init_population(params);
            evolution::Rng rng(3);
            for (int g = 0; g < 3; ++g, ++generations) {
                auto s = evolution::step_generation(pop, p, *b, suite, params, rng);
                const auto& r = s.report;
                worst = std::max(worst, std::fabs(r.ptx_ms + r.jit_ms + r.other_ms - r.total_ms));
                pop = std::move(s.next);
            }
        }
    }
    return pass_if(worst <= 1.0, std::to_string(generations) + fmt(" generations, max |ptx+jit+other-total| %.3g ms", worst));
}

} // namespace

int main()
{
    struct Criterion {
        int number;
        const char* name;
        Result (*run)();
        bool timing = false;
    };
    const Criterion criteria[] = {
        {1, "oracle equivalence", oracle_equivalence},
        {2, "backend equivalence", backend_equivalence},
        {3, "compile serialization", serialization},
        {4, "speedup ordering", speedup_ordering, true},
        {5, "daemon scaling", daemon_scaling, true},
        {6, "amortization", amortization, true},
        {7, "known-solution fitness", known_solutions},
        {8, "k6 target", k6_reference},
        {9, "protocol safety and liveness", protocol},
        {10, "partition balance", partition_property},
        {11, "metric decomposition", metric_decomposition},
    };
    int gating_failures = 0;
    for (const auto& c : criteria) {
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {Verdict::fail, std::string("exception: ") + e.what()};
        }
        r.gating = !c.timing;
        const char* v = r.verdict == Verdict::pass ? "PASS" : r.verdict == Verdict::skip ? "SKIP" : "FAIL";
        std::printf("criterion %2d %-29s %s  %s%s\n", c.number, c.name, v, r.detail.c_str(),
                    r.verdict == Verdict::fail && !r.gating ? " (timing criterion, not gating)" : "");
        std::fflush(stdout);
        if (r.verdict == Verdict::fail && r.gating)
            ++gating_failures;
    }
    return gating_failures == 0 ? 0 : 1;
}
