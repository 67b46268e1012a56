#include <doctest.h>

#include <random>
#include <thread>

#include <signal.h>
#include <sys/wait.h>

#include "gpc/backends/daemon.hpp"
#include "gpc/backends/ipc.hpp"
#include "gpc/grammar.hpp"
#include "gpc/problems.hpp"

using namespace gpc;
using namespace gpc::backends;

namespace {

BackendOptions opts(std::string prefix = {})
{
    BackendOptions o;
    o.executable = GPCOMP_EXE;
    o.id_prefix = std::move(prefix);
    return o;
}

std::vector<std::string> phenotypes(const problems::ProblemSpec& p, std::size_t n, std::uint64_t seed)
{
    std::vector<std::string> out;
    for (std::uint64_t s = seed; out.size() < n; ++s) {
        auto d = grammar::derive(p.grammar, grammar::random_genotype(s, 80));
        if (d.completed)
            out.push_back(d.phenotype);
    }
    return out;
}

std::vector<kernelc::SourceUnit> split(const problems::ProblemSpec& p, const std::vector<std::string>& ph, std::size_t k)
{
    std::vector<kernelc::SourceUnit> units;
    std::size_t at = 0;
    for (auto sz : partition(ph.size(), k)) {
        units.push_back(problems::emit_batch_source(p, std::span(ph).subspan(at, sz), at));
        at += sz;
    }
    return units;
}

bool alive(pid_t pid)
{
    return ::kill(pid, 0) == 0;
}

} // namespace

TEST_CASE("partition examples and balance")
{
    CHECK(partition(300, 8) == std::vector<std::size_t>{38, 38, 38, 38, 37, 37, 37, 37});
    CHECK(partition(10, 2) == std::vector<std::size_t>{5, 5});
    CHECK(partition(7, 3) == std::vector<std::size_t>{3, 2, 2});
    CHECK_THROWS_AS(partition(3, 0), std::invalid_argument);
    for (std::size_t n = 0; n <= 10000; n += 7)
        for (std::size_t k = 1; k <= 64; ++k) {
            auto s = partition(n, k);
            std::size_t sum = 0;
            for (auto v : s)
                sum += v;
            CHECK(sum == n);
            CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
        }
}

TEST_CASE("backend names")
{
    CHECK(parse_backend("daemon_pool(4)") == BackendKind::daemon_pool(4));
    CHECK(parse_backend("daemon_pool", 2).label() == "daemon_pool(2)");
    CHECK(parse_backend("in_process") == BackendKind::in_process());
    CHECK_THROWS(parse_backend("gpu"));
}

TEST_CASE("named signal is an auto-reset event")
{
    std::string name = "/gpctest" + std::to_string(::getpid()) + "s";
    auto s = NamedSignal::create(name);
    CHECK_FALSE(s.wait_for(std::chrono::milliseconds(1)));
    s.set();
    s.set();
    CHECK(s.wait_for(std::chrono::milliseconds(1)));
    CHECK_FALSE(s.wait_for(std::chrono::milliseconds(1)));
    NamedSignal::unlink(name);
}

TEST_CASE("shared region framing")
{
    std::string name = "/gpctest" + std::to_string(::getpid()) + "r";
    SharedRegion::unlink(name);
    auto r = SharedRegion::create(name, 64);
    std::vector<std::byte> payload(10, std::byte{7});
    r.write(PayloadKind::module, payload);
    auto other = SharedRegion::open(name);
    auto m = other.read();
    CHECK(m.kind == PayloadKind::module);
    CHECK(m.payload == payload);
    CHECK_THROWS_AS(r.write(PayloadKind::source, std::vector<std::byte>(100)), ProtocolError);
    // A bad version in the header is caught on read.
    r.data()[0] = std::byte{9};
    CHECK_THROWS_AS(other.read(), ProtocolError);
    SharedRegion::unlink(name);

    std::vector<std::byte> body(3, std::byte{1});
    append_timings(body, {1.25, 2.5});
    auto t = take_timings(body);
    CHECK(body.size() == 3);
    CHECK(t.stage1_ms == 1.25);
    CHECK(t.stage2_ms == 2.5);
}

TEST_CASE("all backends produce identical modules")
{
    auto p = problems::make_problem(problems::ProblemKind::k6);
    auto ph = phenotypes(p, 60, 11);
    auto in = make_backend(BackendKind::in_process(), opts());
    auto ref = in->compile(split(p, ph, 1));
    auto ref_bytes = kernelc::encode_module(merge_modules(ref.modules));
    CHECK(ref.metrics.stage1_ms > 0);

    auto out = make_backend(BackendKind::out_of_process(), opts());
    auto o = out->compile(split(p, ph, 1));
    CHECK(kernelc::encode_module(merge_modules(o.modules)) == ref_bytes);
    CHECK(o.metrics.overhead_ms > 0);

    for (unsigned k : {1u, 3u}) {
        auto pool = make_backend(BackendKind::daemon_pool(k), opts());
        CHECK(pool->parallelism() == k);
        auto d = pool->compile(split(p, ph, k));
        CHECK(d.modules.size() == k);
        CHECK(kernelc::encode_module(merge_modules(d.modules)) == ref_bytes);
    }
}

TEST_CASE("compile errors carry entry and line")
{
    kernelc::SourceUnit bad{"__in int a[];\n__out int out[];\n__entry ind_3() {\nout[tid] = ;\n}\n", {"ind_3"}};
    std::vector<kernelc::SourceUnit> units{bad};
    for (auto kind : {BackendKind::in_process(), BackendKind::out_of_process(), BackendKind::daemon_pool(1)}) {
        auto b = make_backend(kind, opts());
        try {
            b->compile(units);
            FAIL("no error from " << kind.label());
        } catch (const CompileFailure& e) {
            std::string w = e.what();
            CHECK(w.find("ind_3") != std::string::npos);
            CHECK(w.find("line 4") != std::string::npos);
        }
    }
}

TEST_CASE("daemon pool lifecycle")
{
    auto pool = DaemonPool::start(4, opts("gpct" + std::to_string(::getpid()) + "a"));
    for (auto s : pool->states())
        CHECK(s == DaemonState::available);
    CHECK_THROWS_AS(DaemonPool::start(1, opts("gpct" + std::to_string(::getpid()) + "a")), ProtocolError);
    auto pids = pool->pids();
    auto rep = pool->shutdown();
    CHECK(rep.stopped == 4);
    for (auto pid : pids)
        CHECK_FALSE(alive(pid));
    auto again = pool->shutdown();
    CHECK(again.stopped == 0);
    CHECK(again.already_dead == 0);
}

TEST_CASE("missing daemon binary names the ID")
{
    auto o = opts("gpct" + std::to_string(::getpid()) + "m");
    o.executable = "/nonexistent/gpcomp";
    o.handshake_timeout = std::chrono::milliseconds(500);
    try {
        DaemonPool::start(1, o);
        FAIL("started");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(o.id_prefix + "d0") != std::string::npos);
    }
}

TEST_CASE("two batches trace S-A-P-A-P-A")
{
    auto p = problems::make_problem(problems::ProblemKind::search);
    auto ph = phenotypes(p, 4, 3);
    auto pool = DaemonPool::start(1, opts());
    pool->compile(split(p, ph, 1));
    pool->compile(split(p, ph, 1));
    auto t = pool->trace();
    std::vector<DaemonState> seq;
    for (const auto& x : t)
        seq.push_back(x.to);
    using S = DaemonState;
    CHECK(seq == std::vector<S>{S::available, S::processing, S::available, S::processing, S::available});
    CHECK(t.front().from == S::starting);
}

TEST_CASE("shutdown with a dead daemon")
{
    auto pool = DaemonPool::start(2, opts());
    auto pid = pool->pids()[0];
    ::kill(pid, SIGKILL);
    ::usleep(100000);
    auto rep = pool->shutdown();
    CHECK(rep.already_dead == 1);
    CHECK(rep.stopped == 1);
}

TEST_CASE("killed daemon is respawned")
{
    auto p = problems::make_problem(problems::ProblemKind::mul5);
    auto ph = phenotypes(p, 40, 5);
    auto units = split(p, ph, 4);
    auto pool = DaemonPool::start(4, opts());
    ::kill(pool->pids()[2], SIGKILL);
    CHECK_THROWS_AS(pool->compile(units), ProtocolError);
    CHECK(pool->respawn_count() == 1);
    auto r = pool->compile(units);
    CHECK(r.modules.size() == 4);
}

TEST_CASE("fuzzed batches keep to legal transitions")
{
    auto p = problems::make_problem(problems::ProblemKind::k6);
    auto pool_ph = phenotypes(p, 64, 21);
    std::mt19937 rng(8);
    std::size_t transitions = 0;
    for (unsigned k = 1; k <= 8; ++k) {
        auto pool = DaemonPool::start(k, opts());
        for (int b = 0; b < 25; ++b) {
            std::size_t n = rng() % pool_ph.size();
            std::vector<std::string> ph(pool_ph.begin(), pool_ph.begin() + static_cast<std::ptrdiff_t>(n));
            std::size_t units = 1 + rng() % k;
            pool->compile(split(p, ph, units));
        }
        for (const auto& t : pool->trace())
            CHECK(legal_transition(t.from, t.to, t.by));
        transitions += pool->trace().size();
    }
    CHECK(transitions > 0);
}

TEST_CASE("illegal transitions are rejected and recorded")
{
    TraceRecorder tr;
    StateMirror m("x", &tr);
    CHECK_THROWS_AS(m.move(DaemonState::processing, Trigger::main), ProtocolError);
    m.move(DaemonState::available, Trigger::daemon);
    CHECK_THROWS_AS(m.move(DaemonState::processing, Trigger::daemon), ProtocolError);
    m.move(DaemonState::processing, Trigger::main);
    CHECK_THROWS_AS(m.move(DaemonState::starting, Trigger::daemon), ProtocolError);
    CHECK(tr.snapshot().size() == 5);
}
