#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <sys/types.h>

#include "gpc/backends/backend.hpp"
#include "gpc/backends/ipc.hpp"

namespace gpc::backends {

enum class DaemonState : std::uint8_t { starting, available, processing };
enum class Trigger : std::uint8_t { daemon, main };

const char* state_name(DaemonState s);

/// Starting->Available and Processing->Available are triggered by the
/// daemon, Available->Processing by the main process. Nothing re-enters
/// Starting.
bool legal_transition(DaemonState from, DaemonState to, Trigger by);

struct Transition {
    std::string id;
    DaemonState from;
    DaemonState to;
    Trigger by;
};

/// Records every attempted transition, legal or not.
class TraceRecorder {
public:
    void record(Transition t);
    std::vector<Transition> snapshot() const;
    void clear();

private:
    mutable std::mutex mu_;
    std::vector<Transition> log_;
};

/// One side's copy of a daemon's state. Illegal transitions throw
/// ProtocolError after being recorded.
class StateMirror {
public:
    explicit StateMirror(std::string id, TraceRecorder* trace = nullptr);
    DaemonState state() const { return state_; }
    void move(DaemonState to, Trigger by);

private:
    std::string id_;
    DaemonState state_ = DaemonState::starting;
    TraceRecorder* trace_;
};

/// Body of the `daemon --id ID` subcommand. Returns the exit code: 0 after
/// a shutdown request, 3 on protocol failure.
int daemon_main(const std::string& id, bool trace = false);

struct ShutdownReport {
    std::size_t stopped = 0;
    std::size_t already_dead = 0;
    std::size_t forced_kills = 0;
};

class DaemonPool final : public Backend {
public:
    /// Spawns k daemons and waits until every one is Available.
    static std::unique_ptr<DaemonPool> start(unsigned k, const BackendOptions& opts);
    ~DaemonPool() override;

    BackendKind kind() const override { return BackendKind::daemon_pool(static_cast<unsigned>(daemons_.size())); }
    std::size_t parallelism() const override { return daemons_.size(); }
    /// Dispatches unit i to daemon i; at most k units. A dead or timed-out
    /// daemon is respawned and the batch fails with ProtocolError.
    BatchResult compile(std::span<const kernelc::SourceUnit> units) override;

    /// Idempotent; a second call reports nothing.
    ShutdownReport shutdown();

    std::vector<pid_t> pids() const;
    std::vector<std::string> ids() const;
    std::vector<DaemonState> states() const;
    std::vector<Transition> trace() const { return trace_.snapshot(); }
    void clear_trace() { trace_.clear(); }
    std::size_t respawn_count() const { return respawns_; }

    struct Daemon;

private:
    DaemonPool(std::string prefix, BackendOptions opts);
    void launch(Daemon& d);
    void handshake(Daemon& d);
    void respawn(Daemon& d);
    void release_names(const Daemon& d);

    std::string prefix_;
    BackendOptions opts_;
    std::vector<std::unique_ptr<Daemon>> daemons_;
    TraceRecorder trace_;
    std::size_t respawns_ = 0;
    bool shut_down_ = false;
};

} // namespace gpc::backends
