#pragma once

#include <cstdint>
#include <span>

#include "gpc/buffers.hpp"
#include "gpc/kernelc/ast.hpp"

namespace gpc::kernelc {

enum class InterpStatus : std::uint8_t { ok, fault, diverged };

struct InterpOutcome {
    InterpStatus status = InterpStatus::ok;
    /// Last value written to out[tid], or 0 when the entry never stores.
    double value = 0.0;
};

/// Tree-walking evaluator over the checked AST. It shares no code with the
/// lowering, register allocation or VM paths and serves as their oracle.
/// `inputs` are indexed by input slot. Loop iterations beyond
/// `iteration_cap` (summed over all loops) report `diverged`.
InterpOutcome interpret(const Program& prog, const EntryDecl& entry, std::span<const HostArray> inputs,
                        std::int32_t tid, std::uint64_t iteration_cap, bool bounds_check = true);

} // namespace gpc::kernelc
