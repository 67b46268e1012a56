#include "gpc/backends/daemon.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <set>
#include <thread>

#include <unistd.h>

#include "process.hpp"

namespace gpc::backends {

namespace {

using kernelc::Clock;
using namespace std::chrono_literals;

constexpr auto poll_slice = 50ms;

std::mutex registry_mu;
std::set<std::string>& live_prefixes()
{
    static std::set<std::string> s;
    return s;
}

std::string default_prefix()
{
    static std::atomic<unsigned> n{0};
    return "gpc" + std::to_string(::getpid()) + "p" + std::to_string(n++);
}

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Outcome {
    enum class Kind { ok, compile_error, failed } kind = Kind::failed;
    std::vector<std::byte> bytes;
    StageTimes times;
    std::string message;
};

} // namespace

const char* state_name(DaemonState s)
{
    switch (s) {
    case DaemonState::starting: return "Starting";
    case DaemonState::available: return "Available";
    case DaemonState::processing: return "Processing";
    }
    return "?";
}

bool legal_transition(DaemonState from, DaemonState to, Trigger by)
{
    if (from == DaemonState::starting && to == DaemonState::available)
        return by == Trigger::daemon;
    if (from == DaemonState::processing && to == DaemonState::available)
        return by == Trigger::daemon;
    if (from == DaemonState::available && to == DaemonState::processing)
        return by == Trigger::main;
    return false;
}

void TraceRecorder::record(Transition t)
{
    std::lock_guard lock(mu_);
    log_.push_back(std::move(t));
}

std::vector<Transition> TraceRecorder::snapshot() const
{
    std::lock_guard lock(mu_);
    return log_;
}

void TraceRecorder::clear()
{
    std::lock_guard lock(mu_);
    log_.clear();
}

StateMirror::StateMirror(std::string id, TraceRecorder* trace) : id_(std::move(id)), trace_(trace) {}

void StateMirror::move(DaemonState to, Trigger by)
{
    if (trace_)
        trace_->record({id_, state_, to, by});
    if (!legal_transition(state_, to, by))
        throw ProtocolError("daemon " + id_ + ": illegal transition " + state_name(state_) + " -> " + state_name(to));
    state_ = to;
}

// ---- daemon side -------------------------------------------------------

int daemon_main(const std::string& id, bool trace)
{
    try {
        NamedSignal to_main = NamedSignal::open(signal_name(id, 1));
        NamedSignal to_daemon = NamedSignal::open(signal_name(id, 2));
        SharedRegion::unlink(region_name(id));
        SharedRegion region = SharedRegion::create(region_name(id));

        TraceRecorder local;
        StateMirror mirror(id, &local);
        auto report = [&] {
            if (!trace)
                return;
            for (const auto& t : local.snapshot())
                std::cerr << "daemon " << id << ": " << state_name(t.from) << " -> " << state_name(t.to) << '\n';
            local.clear();
        };
        const pid_t parent = ::getppid();

        mirror.move(DaemonState::available, Trigger::daemon);
        report();
        to_main.set();

        while (true) {
            if (!to_daemon.wait_for(1000ms)) {
                if (::getppid() != parent)
                    return 0; // main process is gone
                continue;
            }
            Message msg = region.read();
            if (msg.kind == PayloadKind::shutdown) {
                SharedRegion::unlink(region_name(id));
                return 0;
            }
            mirror.move(DaemonState::processing, Trigger::main);

            PayloadKind kind = PayloadKind::error;
            std::vector<std::byte> payload;
            StageTimes times;
            if (msg.kind != PayloadKind::source) {
                payload = to_bytes("unexpected payload kind " + std::to_string(static_cast<unsigned>(msg.kind)));
            } else {
                std::string text = to_string(msg.payload);
                try {
                    auto c = kernelc::compile_unit({text, kernelc::scan_entry_names(text)});
                    times = {c.timings.stage1_ms, c.timings.stage2_ms};
                    kind = PayloadKind::module;
                    payload = std::move(c.bytes);
                } catch (const std::exception& e) {
                    payload = to_bytes(e.what());
                }
            }
            if (payload.size() + timing_trailer_size > region.capacity()) {
                kind = PayloadKind::error;
                payload = to_bytes("module of " + std::to_string(payload.size()) + " bytes exceeds region capacity");
            }
            append_timings(payload, times);
            region.write(kind, payload);
            mirror.move(DaemonState::available, Trigger::daemon);
            report();
            to_main.set();
        }
    } catch (const std::exception& e) {
        std::cerr << "daemon " << id << ": " << e.what() << '\n';
        return 3;
    }
}

// ---- main side ---------------------------------------------------------

struct DaemonPool::Daemon {
    std::string id;
    pid_t pid = -1; // -1 once reaped
    NamedSignal to_main;   // signal 1
    NamedSignal to_daemon; // signal 2
    SharedRegion region;
    std::unique_ptr<StateMirror> mirror;
    bool owns_names = false; // false until both signals were created here
};

DaemonPool::DaemonPool(std::string prefix, BackendOptions opts) : prefix_(std::move(prefix)), opts_(std::move(opts)) {}

std::unique_ptr<DaemonPool> DaemonPool::start(unsigned k, const BackendOptions& opts)
{
    if (k == 0)
        throw std::invalid_argument("daemon pool needs at least one daemon");
    std::string prefix = opts.id_prefix.empty() ? default_prefix() : opts.id_prefix;
    {
        std::lock_guard lock(registry_mu);
        if (!live_prefixes().insert(prefix).second)
            throw ProtocolError("daemon pool prefix '" + prefix + "' is already in use");
    }
    std::unique_ptr<DaemonPool> pool(new DaemonPool(prefix, opts));
    for (unsigned i = 0; i < k; ++i) {
        auto d = std::make_unique<Daemon>();
        d->id = prefix + "d" + std::to_string(i);
        pool->daemons_.push_back(std::move(d));
    }
    // Launch everything first so the daemons start up concurrently.
    for (auto& d : pool->daemons_)
        pool->launch(*d);
    for (auto& d : pool->daemons_)
        pool->handshake(*d);
    return pool;
}

DaemonPool::~DaemonPool()
{
    try {
        shutdown();
    } catch (const std::exception& e) {
        std::cerr << "daemon pool shutdown: " << e.what() << '\n';
    }
}

void DaemonPool::launch(Daemon& d)
{
    d.mirror = std::make_unique<StateMirror>(d.id, &trace_);
    d.to_main = NamedSignal::create(signal_name(d.id, 1));
    d.to_daemon = NamedSignal::create(signal_name(d.id, 2));
    d.owns_names = true;
    try {
        d.pid = detail::spawn(opts_.executable, {"daemon", "--id", d.id}, "daemon " + d.id);
    } catch (const std::exception& e) {
        d.pid = -1;
        throw ProtocolError(e.what());
    }
}

void DaemonPool::handshake(Daemon& d)
{
    auto deadline = Clock::now() + opts_.handshake_timeout;
    while (!d.to_main.wait_for(poll_slice)) {
        if (auto st = detail::try_reap(d.pid)) {
            d.pid = -1;
            throw ProtocolError("daemon " + d.id + " exited with status " + std::to_string(*st) + " during startup");
        }
        if (Clock::now() >= deadline) {
            detail::kill_and_reap(d.pid);
            d.pid = -1;
            throw ProtocolError("daemon " + d.id + " handshake timed out");
        }
    }
    d.region = SharedRegion::open(region_name(d.id));
    d.mirror->move(DaemonState::available, Trigger::daemon);
}

void DaemonPool::release_names(const Daemon& d)
{
    if (!d.owns_names)
        return;
    NamedSignal::unlink(signal_name(d.id, 1));
    NamedSignal::unlink(signal_name(d.id, 2));
    SharedRegion::unlink(region_name(d.id));
}

void DaemonPool::respawn(Daemon& d)
{
    if (d.pid > 0)
        detail::kill_and_reap(d.pid);
    d.pid = -1;
    d.region = SharedRegion();
    d.to_main = NamedSignal();
    d.to_daemon = NamedSignal();
    release_names(d);
    d.owns_names = false;
    ++respawns_;
    launch(d);
    handshake(d);
}

BatchResult DaemonPool::compile(std::span<const kernelc::SourceUnit> units)
{
    if (shut_down_)
        throw ProtocolError("daemon pool is shut down");
    if (units.size() > daemons_.size())
        throw std::invalid_argument("batch has " + std::to_string(units.size()) + " units for "
                                    + std::to_string(daemons_.size()) + " daemons");
    auto t0 = Clock::now();

    for (std::size_t j = 0; j < units.size(); ++j) {
        Daemon& d = *daemons_[j];
        if (d.mirror->state() != DaemonState::available)
            throw ProtocolError("daemon " + d.id + " is not available");
        d.region.write(PayloadKind::source, to_bytes(units[j].text));
    }
    for (std::size_t j = 0; j < units.size(); ++j) {
        Daemon& d = *daemons_[j];
        d.mirror->move(DaemonState::processing, Trigger::main);
        d.to_daemon.set();
    }

    // One waiting agent per busy daemon.
    std::vector<Outcome> outcomes(units.size());
    auto agent = [this, &outcomes](std::size_t j) {
        Daemon& d = *daemons_[j];
        Outcome& o = outcomes[j];
        auto deadline = Clock::now() + opts_.compile_timeout;
        try {
            while (!d.to_main.wait_for(poll_slice)) {
                if (auto st = detail::try_reap(d.pid)) {
                    d.pid = -1;
                    o.message = "daemon " + d.id + " died with status " + std::to_string(*st);
                    return;
                }
                if (Clock::now() >= deadline) {
                    o.message = "daemon " + d.id + " timed out";
                    return;
                }
            }
            Message m = d.region.read();
            o.times = take_timings(m.payload);
            d.mirror->move(DaemonState::available, Trigger::daemon);
            if (m.kind == PayloadKind::module) {
                o.kind = Outcome::Kind::ok;
                o.bytes = std::move(m.payload);
            } else if (m.kind == PayloadKind::error) {
                o.kind = Outcome::Kind::compile_error;
                o.message = to_string(m.payload);
            } else {
                o.message = "daemon " + d.id + " sent payload kind " + std::to_string(static_cast<unsigned>(m.kind));
            }
        } catch (const std::exception& e) {
            o.kind = Outcome::Kind::failed;
            o.message = "daemon " + d.id + ": " + e.what();
        }
    };
    if (units.size() == 1) {
        agent(0);
    } else {
        std::vector<std::thread> agents;
        for (std::size_t j = 0; j < units.size(); ++j)
            agents.emplace_back(agent, j);
        for (auto& t : agents)
            t.join();
    }

    std::string failures;
    for (std::size_t j = 0; j < units.size(); ++j) {
        if (outcomes[j].kind != Outcome::Kind::failed)
            continue;
        failures += (failures.empty() ? "" : "; ") + outcomes[j].message;
        respawn(*daemons_[j]);
    }
    if (!failures.empty())
        throw ProtocolError("batch failed: " + failures);
    for (const auto& o : outcomes)
        if (o.kind == Outcome::Kind::compile_error)
            throw CompileFailure(o.message);

    BatchResult r;
    const Outcome* critical = nullptr;
    for (const auto& o : outcomes) {
        if (!critical || o.times.stage1_ms + o.times.stage2_ms > critical->times.stage1_ms + critical->times.stage2_ms)
            critical = &o;
        r.modules.push_back(kernelc::decode_module(o.bytes));
        r.bytes.push_back(o.bytes);
    }
    for (const auto& u : units)
        r.metrics.batch_size += u.entry_names.size();
    if (critical) {
        r.metrics.stage1_ms = critical->times.stage1_ms;
        r.metrics.stage2_ms = critical->times.stage2_ms;
    }
    r.metrics.overhead_ms = std::max(0.0, ms_since(t0) - (r.metrics.stage1_ms + r.metrics.stage2_ms));
    return r;
}

ShutdownReport DaemonPool::shutdown()
{
    ShutdownReport rep;
    if (shut_down_)
        return rep;
    shut_down_ = true;
    for (auto& dp : daemons_) {
        Daemon& d = *dp;
        if (d.pid < 0 || detail::try_reap(d.pid)) {
            d.pid = -1;
            ++rep.already_dead;
        } else {
            bool sent = false;
            if (d.region.valid() && d.to_daemon.valid()) {
                d.region.write(PayloadKind::shutdown, {});
                d.to_daemon.set();
                sent = true;
            }
            if (sent && detail::wait_exit(d.pid, opts_.shutdown_timeout)) {
                ++rep.stopped;
            } else {
                detail::kill_and_reap(d.pid);
                std::cerr << "daemon " << d.id << " did not stop; killed\n";
                ++rep.forced_kills;
            }
            d.pid = -1;
        }
        d.region = SharedRegion();
        d.to_main = NamedSignal();
        d.to_daemon = NamedSignal();
        release_names(d);
    }
    std::lock_guard lock(registry_mu);
    live_prefixes().erase(prefix_);
    return rep;
}

std::vector<pid_t> DaemonPool::pids() const
{
    std::vector<pid_t> v;
    for (const auto& d : daemons_)
        v.push_back(d->pid);
    return v;
}

std::vector<std::string> DaemonPool::ids() const
{
    std::vector<std::string> v;
    for (const auto& d : daemons_)
        v.push_back(d->id);
    return v;
}

std::vector<DaemonState> DaemonPool::states() const
{
    std::vector<DaemonState> v;
    for (const auto& d : daemons_)
        v.push_back(d->mirror ? d->mirror->state() : DaemonState::starting);
    return v;
}

} // namespace gpc::backends
