#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <semaphore.h>

namespace gpc::backends {

/// Failures of the daemon protocol: timeouts, dead peers, bad regions.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// POSIX requires a leading '/' on portable object names, so the protocol
// names `<ID>1`, `<ID>2` and `GPMM<ID>` appear as `/<ID>1` and so on.
std::string signal_name(const std::string& id, int which);
std::string region_name(const std::string& id);

/// An auto-reset, single-waiter named event built on a named semaphore
/// whose count never exceeds one.
class NamedSignal {
public:
    NamedSignal() = default;
    ~NamedSignal();
    NamedSignal(NamedSignal&& o) noexcept;
    NamedSignal& operator=(NamedSignal&& o) noexcept;
    NamedSignal(const NamedSignal&) = delete;
    NamedSignal& operator=(const NamedSignal&) = delete;

    /// Fails if the name already exists.
    static NamedSignal create(const std::string& name);
    static NamedSignal open(const std::string& name);
    static void unlink(const std::string& name);

    void set();
    /// True when signaled before the timeout.
    bool wait_for(std::chrono::milliseconds timeout);
    void wait();
    bool valid() const { return sem_ != nullptr; }

private:
    explicit NamedSignal(sem_t* s) : sem_(s) {}
    sem_t* sem_ = nullptr;
};

enum class PayloadKind : std::uint32_t { source = 0, module = 1, error = 2, shutdown = 3 };

inline constexpr std::uint32_t protocol_version = 1;
inline constexpr std::size_t region_header_size = 16;
inline constexpr std::size_t default_region_capacity = std::size_t{16} << 20;
inline constexpr std::size_t timing_trailer_size = 16;

struct Message {
    PayloadKind kind = PayloadKind::source;
    std::vector<std::byte> payload;
};

/// A named shared-memory region: u32 version, u32 kind, u64 length, then
/// `capacity` payload bytes. All fields little-endian.
class SharedRegion {
public:
    SharedRegion() = default;
    ~SharedRegion();
    SharedRegion(SharedRegion&& o) noexcept;
    SharedRegion& operator=(SharedRegion&& o) noexcept;
    SharedRegion(const SharedRegion&) = delete;
    SharedRegion& operator=(const SharedRegion&) = delete;

    static SharedRegion create(const std::string& name, std::size_t capacity = default_region_capacity);
    static SharedRegion open(const std::string& name);
    static void unlink(const std::string& name);

    std::size_t capacity() const { return capacity_; }
    bool valid() const { return base_ != nullptr; }

    /// Throws ProtocolError when the payload exceeds the capacity.
    void write(PayloadKind kind, std::span<const std::byte> payload);
    /// Checks the version and length on every read.
    Message read() const;

    /// Raw header access for fault-injection tests.
    std::byte* data() { return base_; }

private:
    std::byte* base_ = nullptr;
    std::size_t mapped_ = 0;
    std::size_t capacity_ = 0;
};

struct StageTimes {
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
};

/// Appends the 16-byte trailer of two little-endian doubles.
void append_timings(std::vector<std::byte>& payload, StageTimes t);
/// Splits the trailer off `payload`.
StageTimes take_timings(std::vector<std::byte>& payload);

std::vector<std::byte> to_bytes(std::string_view s);
std::string to_string(std::span<const std::byte> b);

} // namespace gpc::backends
