#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpc/kernelc/compiler.hpp"

namespace gpc::backends {

enum class BackendType : std::uint8_t { in_process, out_of_process, daemon_pool };

struct BackendKind {
    BackendType type = BackendType::in_process;
    unsigned daemons = 0; // daemon_pool only, >= 1

    static BackendKind in_process() { return {BackendType::in_process, 0}; }
    static BackendKind out_of_process() { return {BackendType::out_of_process, 0}; }
    static BackendKind daemon_pool(unsigned k) { return {BackendType::daemon_pool, k}; }

    /// "in_process", "out_of_process" or "daemon_pool".
    std::string type_name() const;
    /// type_name plus the daemon count, e.g. "daemon_pool(4)".
    std::string label() const;

    friend bool operator==(const BackendKind&, const BackendKind&) = default;
};

/// Accepts "in_process", "out_of_process", "daemon_pool" (with `daemons`)
/// and "daemon_pool(K)".
BackendKind parse_backend(std::string_view text, unsigned daemons = 0);

struct CompileMetrics {
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    double overhead_ms = 0.0;
    std::size_t batch_size = 0; // individuals

    double total_ms() const { return stage1_ms + stage2_ms + overhead_ms; }
};

struct BatchResult {
    std::vector<kernelc::ModuleBinary> modules; // one per source unit
    std::vector<std::vector<std::byte>> bytes;  // encoded modules
    CompileMetrics metrics;
};

/// A unit failed to compile. `what()` names the entry and line.
class CompileFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackendOptions {
    /// Executable that understands the `daemon` and `compile-worker`
    /// subcommands.
    std::filesystem::path executable;
    /// Daemon IDs are `<prefix>d<i>`. Empty picks a per-process default.
    std::string id_prefix;
    std::chrono::milliseconds handshake_timeout{10000};
    std::chrono::milliseconds compile_timeout{30000};
    std::chrono::milliseconds shutdown_timeout{5000};
    /// Scratch directory for the out-of-process backend. Empty means
    /// $GPCOMP_SCRATCH, then $TMPDIR, then /tmp.
    std::filesystem::path scratch_dir;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendKind kind() const = 0;
    /// Number of source units the caller should split a population into.
    virtual std::size_t parallelism() const = 0;
    /// Compiles each unit to its own module. Throws CompileFailure or
    /// ProtocolError.
    virtual BatchResult compile(std::span<const kernelc::SourceUnit> units) = 0;
};

std::unique_ptr<Backend> make_backend(const BackendKind& kind, const BackendOptions& opts = {});

/// Balanced contiguous split of n items into k parts, larger parts first.
std::vector<std::size_t> partition(std::size_t n, std::size_t k);

/// Concatenates the entries of several modules, in order.
kernelc::ModuleBinary merge_modules(std::span<const kernelc::ModuleBinary> modules);

std::filesystem::path default_scratch_dir();

/// Body of the `compile-worker` subcommand: 0 on success, 2 on a compile
/// error (diagnostics on stderr), 3 on I/O failure. Prints stage timings on
/// stdout.
int compile_worker_main(const std::filesystem::path& in, const std::filesystem::path& out);

} // namespace gpc::backends
