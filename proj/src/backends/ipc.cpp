#include "gpc/backends/ipc.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <ctime>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

namespace gpc::backends {

namespace {

std::string sys_error(const std::string& what, const std::string& name)
{
    return what + " '" + name + "': " + std::strerror(errno);
}

template <class T>
void put_le(std::byte* p, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        p[i] = static_cast<std::byte>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
}

template <class T>
T get_le(const std::byte* p)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace

std::string signal_name(const std::string& id, int which)
{
    return "/" + id + std::to_string(which);
}

std::string region_name(const std::string& id)
{
    return "/GPMM" + id;
}

// ---- NamedSignal -------------------------------------------------------

NamedSignal::~NamedSignal()
{
    if (sem_)
        sem_close(sem_);
}

NamedSignal::NamedSignal(NamedSignal&& o) noexcept : sem_(o.sem_)
{
    o.sem_ = nullptr;
}

NamedSignal& NamedSignal::operator=(NamedSignal&& o) noexcept
{
    if (this != &o) {
        if (sem_)
            sem_close(sem_);
        sem_ = o.sem_;
        o.sem_ = nullptr;
    }
    return *this;
}

NamedSignal NamedSignal::create(const std::string& name)
{
    sem_t* s = sem_open(name.c_str(), O_CREAT | O_EXCL, 0600, 0);
    if (s == SEM_FAILED)
        throw ProtocolError(sys_error("cannot create signal", name));
    return NamedSignal(s);
}

NamedSignal NamedSignal::open(const std::string& name)
{
    sem_t* s = sem_open(name.c_str(), 0);
    if (s == SEM_FAILED)
        throw ProtocolError(sys_error("cannot open signal", name));
    return NamedSignal(s);
}

void NamedSignal::unlink(const std::string& name)
{
    sem_unlink(name.c_str());
}

void NamedSignal::set()
{
    int v = 0;
    if (sem_getvalue(sem_, &v) == 0 && v > 0)
        return; // already signaled; events do not count
    sem_post(sem_);
}

bool NamedSignal::wait_for(std::chrono::milliseconds timeout)
{
    timespec ts{};
    clock_gettime(CLOCK_REALTIME, &ts);
    auto ms = timeout.count();
    ts.tv_sec += static_cast<time_t>(ms / 1000);
    ts.tv_nsec += static_cast<long>((ms % 1000) * 1000000);
    if (ts.tv_nsec >= 1000000000) {
        ++ts.tv_sec;
        ts.tv_nsec -= 1000000000;
    }
    while (true) {
        if (sem_timedwait(sem_, &ts) == 0)
            return true;
        if (errno == EINTR)
            continue;
        if (errno == ETIMEDOUT)
            return false;
        throw ProtocolError(std::string("signal wait failed: ") + std::strerror(errno));
    }
}

void NamedSignal::wait()
{
    while (sem_wait(sem_) != 0)
        if (errno != EINTR)
            throw ProtocolError(std::string("signal wait failed: ") + std::strerror(errno));
}

// ---- SharedRegion ------------------------------------------------------

SharedRegion::~SharedRegion()
{
    if (base_)
        munmap(base_, mapped_);
}

SharedRegion::SharedRegion(SharedRegion&& o) noexcept : base_(o.base_), mapped_(o.mapped_), capacity_(o.capacity_)
{
    o.base_ = nullptr;
}

SharedRegion& SharedRegion::operator=(SharedRegion&& o) noexcept
{
    if (this != &o) {
        if (base_)
            munmap(base_, mapped_);
        base_ = o.base_;
        mapped_ = o.mapped_;
        capacity_ = o.capacity_;
        o.base_ = nullptr;
    }
    return *this;
}

SharedRegion SharedRegion::create(const std::string& name, std::size_t capacity)
{
    int fd = shm_open(name.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
    if (fd < 0)
        throw ProtocolError(sys_error("cannot create region", name));
    std::size_t size = region_header_size + capacity;
    if (ftruncate(fd, static_cast<off_t>(size)) != 0) {
        ::close(fd);
        shm_unlink(name.c_str());
        throw ProtocolError(sys_error("cannot size region", name));
    }
    void* p = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
    ::close(fd);
    if (p == MAP_FAILED) {
        shm_unlink(name.c_str());
        throw ProtocolError(sys_error("cannot map region", name));
    }
    SharedRegion r;
    r.base_ = static_cast<std::byte*>(p);
    r.mapped_ = size;
    r.capacity_ = capacity;
    put_le<std::uint32_t>(r.base_, protocol_version);
    put_le<std::uint32_t>(r.base_ + 4, static_cast<std::uint32_t>(PayloadKind::source));
    put_le<std::uint64_t>(r.base_ + 8, 0);
    return r;
}

SharedRegion SharedRegion::open(const std::string& name)
{
    int fd = shm_open(name.c_str(), O_RDWR, 0);
    if (fd < 0)
        throw ProtocolError(sys_error("cannot open region", name));
    struct stat st {};
    if (fstat(fd, &st) != 0 || static_cast<std::size_t>(st.st_size) < region_header_size) {
        ::close(fd);
        throw ProtocolError("region '" + name + "' is too small");
    }
    std::size_t size = static_cast<std::size_t>(st.st_size);
    void* p = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
    ::close(fd);
    if (p == MAP_FAILED)
        throw ProtocolError(sys_error("cannot map region", name));
    SharedRegion r;
    r.base_ = static_cast<std::byte*>(p);
    r.mapped_ = size;
    r.capacity_ = size - region_header_size;
    return r;
}

void SharedRegion::unlink(const std::string& name)
{
    shm_unlink(name.c_str());
}

void SharedRegion::write(PayloadKind kind, std::span<const std::byte> payload)
{
    if (payload.size() > capacity_)
        throw ProtocolError("payload of " + std::to_string(payload.size()) + " bytes exceeds region capacity "
                            + std::to_string(capacity_));
    put_le<std::uint32_t>(base_, protocol_version);
    put_le<std::uint32_t>(base_ + 4, static_cast<std::uint32_t>(kind));
    put_le<std::uint64_t>(base_ + 8, payload.size());
    if (!payload.empty())
        std::memcpy(base_ + region_header_size, payload.data(), payload.size());
}

Message SharedRegion::read() const
{
    auto version = get_le<std::uint32_t>(base_);
    if (version != protocol_version)
        throw ProtocolError("region protocol version " + std::to_string(version) + ", expected "
                            + std::to_string(protocol_version));
    auto kind = get_le<std::uint32_t>(base_ + 4);
    if (kind > static_cast<std::uint32_t>(PayloadKind::shutdown))
        throw ProtocolError("unknown payload kind " + std::to_string(kind));
    auto len = get_le<std::uint64_t>(base_ + 8);
    if (len > capacity_)
        throw ProtocolError("payload length " + std::to_string(len) + " exceeds region capacity");
    Message m;
    m.kind = static_cast<PayloadKind>(kind);
    m.payload.assign(base_ + region_header_size, base_ + region_header_size + len);
    return m;
}

// ---- payload helpers ---------------------------------------------------

void append_timings(std::vector<std::byte>& payload, StageTimes t)
{
    std::size_t at = payload.size();
    payload.resize(at + timing_trailer_size);
    put_le<std::uint64_t>(payload.data() + at, std::bit_cast<std::uint64_t>(t.stage1_ms));
    put_le<std::uint64_t>(payload.data() + at + 8, std::bit_cast<std::uint64_t>(t.stage2_ms));
}

StageTimes take_timings(std::vector<std::byte>& payload)
{
    if (payload.size() < timing_trailer_size)
        throw ProtocolError("response is missing its timing trailer");
    std::size_t at = payload.size() - timing_trailer_size;
    StageTimes t;
    t.stage1_ms = std::bit_cast<double>(get_le<std::uint64_t>(payload.data() + at));
    t.stage2_ms = std::bit_cast<double>(get_le<std::uint64_t>(payload.data() + at + 8));
    payload.resize(at);
    return t;
}

std::vector<std::byte> to_bytes(std::string_view s)
{
    std::vector<std::byte> b(s.size());
    if (!s.empty())
        std::memcpy(b.data(), s.data(), s.size());
    return b;
}

std::string to_string(std::span<const std::byte> b)
{
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

} // namespace gpc::backends
