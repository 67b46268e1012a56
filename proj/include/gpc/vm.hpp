#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpc/buffers.hpp"
#include "gpc/kernelc/module.hpp"

namespace gpc::problems {
struct ProblemSpec;
struct TestSuite;
} // namespace gpc::problems

namespace gpc::vm {

inline constexpr std::size_t warp_size = 32;
inline constexpr std::uint64_t default_instruction_budget = 100000;

/// Threads are allocated in whole warps.
constexpr std::size_t allocated_threads(std::size_t requested)
{
    return (requested + warp_size - 1) / warp_size * warp_size;
}

enum class ThreadStatus : std::uint8_t { ok, fault, budget_exhausted };

struct LaunchConfig {
    std::string entry;
    std::size_t requested_threads = 0;
    std::uint64_t instruction_budget = default_instruction_budget;
    /// Worker threads used to run the logical threads; results never
    /// depend on this.
    unsigned workers = 1;
    /// When set, logical threads run in an order shuffled by this seed.
    std::optional<std::uint64_t> shuffle_seed;
};

struct DeviceBuffers {
    std::vector<HostArray> inputs; // indexed by input slot
    bool output_is_float = false;
};

struct ExecResult {
    std::size_t allocated_threads = 0;
    std::vector<double> outputs;         // requested_threads values
    std::vector<ThreadStatus> status;    // requested_threads values
    std::vector<std::uint64_t> executed; // instructions per allocated thread
};

class LaunchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output written by threads that fault or run out of budget.
double sentinel(bool output_is_float);

/// Runs one entry over ceil(requested / 32) * 32 threads. Threads past the
/// requested count read inputs padded with the last case and never write
/// output.
ExecResult launch(const kernelc::ModuleBinary& m, const LaunchConfig& cfg, const DeviceBuffers& bufs);

struct OutputMatrix {
    std::size_t rows = 0; // individuals
    std::size_t cols = 0; // fitness cases
    std::vector<double> values;
    std::vector<ThreadStatus> status;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<const ThreadStatus> row_status(std::size_t i) const { return {status.data() + i * cols, cols}; }
};

/// Launches every entry of every module, in order, over the suite's cases.
/// Row i of the result belongs to the i-th entry overall.
OutputMatrix run_population(std::span<const kernelc::ModuleBinary> modules, const problems::ProblemSpec& p,
                            const problems::TestSuite& suite, std::uint64_t instruction_budget = default_instruction_budget);

} // namespace gpc::vm
