#include "gpc/backends/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <unistd.h>

#include "gpc/backends/daemon.hpp"
#include "process.hpp"

namespace gpc::backends {

namespace {

using kernelc::Clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::size_t entry_total(std::span<const kernelc::SourceUnit> units)
{
    std::size_t n = 0;
    for (const auto& u : units)
        n += u.entry_names.size();
    return n;
}

void finish_metrics(CompileMetrics& m, Clock::time_point t0)
{
    m.overhead_ms = std::max(0.0, ms_since(t0) - (m.stage1_ms + m.stage2_ms));
}

class InProcessBackend final : public Backend {
public:
    BackendKind kind() const override { return BackendKind::in_process(); }
    std::size_t parallelism() const override { return 1; }

    BatchResult compile(std::span<const kernelc::SourceUnit> units) override
    {
        auto t0 = Clock::now();
        BatchResult r;
        r.metrics.batch_size = entry_total(units);
        for (const auto& u : units) {
            kernelc::CompiledUnit c;
            try {
                c = kernelc::compile_unit(u);
            } catch (const kernelc::CompileError& e) {
                throw CompileFailure(e.what());
            }
            r.metrics.stage1_ms += c.timings.stage1_ms;
            r.metrics.stage2_ms += c.timings.stage2_ms;
            r.modules.push_back(std::move(c.module));
            r.bytes.push_back(std::move(c.bytes));
        }
        finish_metrics(r.metrics, t0);
        return r;
    }
};

// Temp files are removed on every exit path.
struct ScratchFiles {
    std::vector<std::filesystem::path> paths;
    ~ScratchFiles()
    {
        std::error_code ec;
        for (const auto& p : paths)
            std::filesystem::remove(p, ec);
    }
};

class OutOfProcessBackend final : public Backend {
public:
    explicit OutOfProcessBackend(BackendOptions opts) : opts_(std::move(opts))
    {
        if (opts_.scratch_dir.empty())
            opts_.scratch_dir = default_scratch_dir();
    }

    BackendKind kind() const override { return BackendKind::out_of_process(); }
    std::size_t parallelism() const override { return 1; }

    BatchResult compile(std::span<const kernelc::SourceUnit> units) override
    {
        auto t0 = Clock::now();
        BatchResult r;
        r.metrics.batch_size = entry_total(units);
        for (const auto& u : units) {
            auto [bytes, times] = compile_one(u);
            r.metrics.stage1_ms += times.first;
            r.metrics.stage2_ms += times.second;
            r.modules.push_back(kernelc::decode_module(bytes));
            r.bytes.push_back(std::move(bytes));
        }
        finish_metrics(r.metrics, t0);
        return r;
    }

private:
    std::pair<std::vector<std::byte>, std::pair<double, double>> compile_one(const kernelc::SourceUnit& u)
    {
        static std::atomic<std::uint64_t> counter{0};
        std::string stem = "gpc_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
        ScratchFiles files;
        auto path = [&](const char* ext) {
            files.paths.push_back(opts_.scratch_dir / (stem + ext));
            return files.paths.back();
        };
        auto src = path(".kc");
        auto mod = path(".gpcm");
        auto out = path(".out");
        auto err = path(".err");

        {
            std::ofstream f(src, std::ios::binary);
            f << u.text;
            if (!f)
                throw std::runtime_error("cannot write " + src.string());
        }
        pid_t pid = detail::spawn(opts_.executable, {"compile-worker", "--in", src.string(), "--out", mod.string()},
                                  "compile-worker", out, err);
        auto status = detail::wait_exit(pid, opts_.compile_timeout);
        if (!status) {
            detail::kill_and_reap(pid);
            throw ProtocolError("compile-worker timed out");
        }
        if (*status == 2)
            throw CompileFailure(detail::read_file(err));
        if (*status != 0)
            throw ProtocolError("compile-worker exited with status " + std::to_string(*status) + ": "
                                + detail::read_file(err));

        std::string timing = detail::read_file(out);
        double s1 = 0.0;
        double s2 = 0.0;
        if (std::sscanf(timing.c_str(), "stage1_ms=%lf stage2_ms=%lf", &s1, &s2) != 2)
            throw ProtocolError("compile-worker printed no timings");
        std::string raw = detail::read_file(mod);
        return {to_bytes(raw), {s1, s2}};
    }

    BackendOptions opts_;
};

} // namespace

std::string BackendKind::type_name() const
{
    switch (type) {
    case BackendType::in_process: return "in_process";
    case BackendType::out_of_process: return "out_of_process";
    case BackendType::daemon_pool: return "daemon_pool";
    }
    return "?";
}

std::string BackendKind::label() const
{
    if (type == BackendType::daemon_pool)
        return type_name() + "(" + std::to_string(daemons) + ")";
    return type_name();
}

BackendKind parse_backend(std::string_view text, unsigned daemons)
{
    if (text == "in_process")
        return BackendKind::in_process();
    if (text == "out_of_process")
        return BackendKind::out_of_process();
    std::string_view dp = "daemon_pool";
    if (text.substr(0, dp.size()) == dp) {
        auto rest = text.substr(dp.size());
        unsigned k = daemons;
        if (!rest.empty()) {
            if (rest.front() != '(' || rest.back() != ')')
                throw std::invalid_argument("bad backend '" + std::string(text) + "'");
            k = static_cast<unsigned>(std::stoul(std::string(rest.substr(1, rest.size() - 2))));
        }
        if (k == 0)
            throw std::invalid_argument("daemon_pool needs at least one daemon");
        return BackendKind::daemon_pool(k);
    }
    throw std::invalid_argument("unknown backend '" + std::string(text)
                                + "' (expected in_process, out_of_process or daemon_pool)");
}

std::unique_ptr<Backend> make_backend(const BackendKind& kind, const BackendOptions& opts)
{
    switch (kind.type) {
    case BackendType::in_process: return std::make_unique<InProcessBackend>();
    case BackendType::out_of_process: return std::make_unique<OutOfProcessBackend>(opts);
    case BackendType::daemon_pool: return DaemonPool::start(kind.daemons, opts);
    }
    return nullptr;
}

std::vector<std::size_t> partition(std::size_t n, std::size_t k)
{
    if (k == 0)
        throw std::invalid_argument("partition count must be at least 1");
    std::vector<std::size_t> sizes(k, n / k);
    for (std::size_t i = 0; i < n % k; ++i)
        ++sizes[i];
    return sizes;
}

kernelc::ModuleBinary merge_modules(std::span<const kernelc::ModuleBinary> modules)
{
    kernelc::ModuleBinary m;
    for (const auto& part : modules)
        m.entries.insert(m.entries.end(), part.entries.begin(), part.entries.end());
    return m;
}

std::filesystem::path default_scratch_dir()
{
    for (const char* var : {"GPCOMP_SCRATCH", "TMPDIR"})
        if (const char* v = std::getenv(var); v && *v)
            return v;
    return "/tmp";
}

int compile_worker_main(const std::filesystem::path& in, const std::filesystem::path& out)
{
    std::string text;
    try {
        text = detail::read_file(in);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 3;
    }
    kernelc::SourceUnit unit{text, kernelc::scan_entry_names(text)};
    kernelc::CompiledUnit c;
    try {
        c = kernelc::compile_unit(unit);
    } catch (const kernelc::CompileError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal compiler error: " << e.what() << '\n';
        return 2;
    }
    {
        std::ofstream f(out, std::ios::binary);
        f.write(reinterpret_cast<const char*>(c.bytes.data()), static_cast<std::streamsize>(c.bytes.size()));
        if (!f) {
            std::cerr << "cannot write " << out << '\n';
            return 3;
        }
    }
    std::printf("stage1_ms=%.17g stage2_ms=%.17g\n", c.timings.stage1_ms, c.timings.stage2_ms);
    return 0;
}

} // namespace gpc::backends
