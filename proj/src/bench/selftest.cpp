#include "gpc/bench/selftest.hpp"

#include <algorithm>
#include <ostream>

#include <signal.h>

#include "gpc/backends/daemon.hpp"
#include "gpc/evolution.hpp"
#include "gpc/oracle.hpp"

namespace gpc::bench {

namespace {

using problems::ProblemKind;

SelftestCheck check_oracle(ProblemKind kind, const SelftestOptions& o)
{
    auto p = problems::make_problem(kind);
    auto suite = problems::generate_cases(p, o.seed);
    auto r = oracle::check_oracle(p, suite, o.individuals, o.seed);
    SelftestCheck c{"oracle-equivalence/" + p.name, r.passed(), {}};
    c.detail = std::to_string(r.individuals) + " individuals, " + std::to_string(r.cases_compared) + " cases, "
               + std::to_string(r.mismatches) + " mismatches";
    if (!r.first_mismatch.empty())
        c.detail += "; first: " + r.first_mismatch;
    return c;
}

SelftestCheck check_module_decode(const SelftestOptions& o)
{
    SelftestCheck c{"module-decode", false, {}};
    try {
        auto p = problems::make_problem(ProblemKind::mul5);
        auto unit = problems::known_solution(p);
        auto compiled = kernelc::compile_unit(unit);
        auto bytes = compiled.bytes;
        if (o.corrupt_module_magic)
            bytes[0] = std::byte{'X'};
        auto decoded = kernelc::decode_module(bytes);
        c.passed = kernelc::encode_module(decoded) == compiled.bytes;
        c.detail = c.passed ? "round trip ok" : "re-encoding differs";
    } catch (const std::exception& e) {
        c.detail = e.what();
    }
    return c;
}

SelftestCheck check_partition()
{
    SelftestCheck c{"partition", true, "n <= 2000, k <= 64"};
    for (std::size_t n = 0; n <= 2000 && c.passed; ++n)
        for (std::size_t k = 1; k <= 64; ++k) {
            auto s = backends::partition(n, k);
            std::size_t sum = 0;
            for (auto v : s)
                sum += v;
            auto [lo, hi] = std::minmax_element(s.begin(), s.end());
            if (s.size() != k || sum != n || *hi - *lo > 1 || !std::is_sorted(s.rbegin(), s.rend())) {
                c.passed = false;
                c.detail = "failed at n=" + std::to_string(n) + " k=" + std::to_string(k);
                break;
            }
        }
    return c;
}

// Same population through every backend; modules and fitness must agree.
SelftestCheck check_backends(const SelftestOptions& o)
{
    SelftestCheck c{"backend-equivalence", false, {}};
    try {
        auto p = problems::make_problem(ProblemKind::search);
        auto suite = problems::generate_cases(p, o.seed);
        evolution::EvolutionParams params;
        params.population_size = 40;
        params.seed = o.seed;
        auto pop = evolution::init_population(params);
        backends::BackendOptions bo;
        bo.executable = o.executable;

        std::vector<std::byte> ref_bytes;
        std::vector<problems::Score> ref_fit;
        std::string ref_name;
        for (auto kind : {backends::BackendKind::in_process(), backends::BackendKind::out_of_process(),
                          backends::BackendKind::daemon_pool(2)}) {
            auto backend = backends::make_backend(kind, bo);
            auto ev = evolution::evaluate(pop, p, *backend, suite, params);
            auto bytes = kernelc::encode_module(backends::merge_modules(ev.modules));
            if (ref_name.empty()) {
                ref_bytes = bytes;
                ref_fit = ev.fitness;
                ref_name = kind.label();
            } else if (bytes != ref_bytes || ev.fitness != ref_fit) {
                c.detail = kind.label() + " differs from " + ref_name;
                return c;
            }
        }
        c.passed = true;
        c.detail = "in_process, out_of_process and daemon_pool(2) agree";
    } catch (const std::exception& e) {
        c.detail = e.what();
    }
    return c;
}

// Consecutive batches on a small pool, with the state trace audited.
std::vector<SelftestCheck> check_daemons(const SelftestOptions& o)
{
    SelftestCheck live{"daemon-liveness", false, {}};
    SelftestCheck sm{"state-machine", false, {}};
    try {
        auto p = problems::make_problem(ProblemKind::k6);
        backends::BackendOptions bo;
        bo.executable = o.executable;
        auto pool = backends::DaemonPool::start(2, bo);
        std::vector<std::string> phenos = {"x * 0.5", "x + 1.0", "sqrt(x)"};
        std::size_t ok = 0;
        const std::size_t batches = 20;
        std::string failure;
        for (std::size_t b = 0; b < batches; ++b) {
            if (o.kill_daemon && b == batches / 2)
                ::kill(pool->pids()[0], SIGKILL);
            std::vector<kernelc::SourceUnit> units = {problems::emit_batch_source(p, phenos, 0),
                                                      problems::emit_batch_source(p, phenos, 3)};
            try {
                pool->compile(units);
                ++ok;
            } catch (const std::exception& e) {
                if (failure.empty())
                    failure = e.what();
            }
        }
        live.passed = ok == batches;
        live.detail = std::to_string(ok) + "/" + std::to_string(batches) + " batches"
                      + (failure.empty() ? "" : "; " + failure);
        auto trace = pool->trace();
        auto bad = std::find_if(trace.begin(), trace.end(),
                                [](const auto& t) { return !backends::legal_transition(t.from, t.to, t.by); });
        sm.passed = bad == trace.end() && !trace.empty();
        sm.detail = std::to_string(trace.size()) + " transitions"
                    + (bad == trace.end() ? "" : std::string(", illegal ") + backends::state_name(bad->from) + " -> "
                                                     + backends::state_name(bad->to));
        pool->shutdown();
    } catch (const std::exception& e) {
        live.detail = e.what();
        sm.detail = e.what();
    }
    return {live, sm};
}

} // namespace

bool SelftestReport::passed() const
{
    return !checks.empty()
           && std::all_of(checks.begin(), checks.end(), [](const SelftestCheck& c) { return c.passed; });
}

SelftestReport selftest(const SelftestOptions& opts, std::ostream* log)
{
    SelftestReport rep;
    auto add = [&](SelftestCheck c) {
        if (log)
            *log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        rep.checks.push_back(std::move(c));
    };
    for (auto kind : {ProblemKind::search, ProblemKind::k6, ProblemKind::mul5})
        add(check_oracle(kind, opts));
    add(check_module_decode(opts));
    add(check_partition());
    add(check_backends(opts));
    for (auto& c : check_daemons(opts))
        add(std::move(c));
    return rep;
}

} // namespace gpc::bench
