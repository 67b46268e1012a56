#include "gpc/kernelc/compiler.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace gpc::kernelc {

namespace {

std::mutex& guard()
{
    static std::mutex m;
    return m;
}

CompileOptions& options()
{
    static CompileOptions o;
    return o;
}

std::atomic<int> holders{0};
std::atomic<int> max_holders{0};
std::atomic<std::uint64_t> acquisitions{0};

// Tracks how many threads are inside the guard at once.
class GuardProbe {
public:
    GuardProbe()
    {
        int now = ++holders;
        int seen = max_holders.load();
        while (now > seen && !max_holders.compare_exchange_weak(seen, now)) {
        }
        ++acquisitions;
    }
    ~GuardProbe() { --holders; }
    GuardProbe(const GuardProbe&) = delete;
    GuardProbe& operator=(const GuardProbe&) = delete;
};

double ms_between(Clock::time_point a, Clock::time_point b)
{
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void check_entry_names(const Program& prog, const SourceUnit& src)
{
    std::size_t n = std::max(prog.entries.size(), src.entry_names.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string declared = i < prog.entries.size() ? prog.entries[i].name : "<none>";
        const std::string listed = i < src.entry_names.size() ? src.entry_names[i] : "<none>";
        if (declared != listed)
            throw CompileError(CompileError::Kind::entry_mismatch, declared,
                               i < prog.entries.size() ? prog.entries[i].loc : SourceLoc{},
                               "entry " + std::to_string(i) + " is declared as '" + declared + "' but listed as '"
                                   + listed + "'");
    }
}

} // namespace

std::string CompileOptions::fingerprint() const
{
    std::string desc = "fold=" + std::to_string(constant_folding ? 1 : 0) + ";bounds=" + std::to_string(bounds_check ? 1 : 0);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(desc)));
    return buf;
}

CompileOptions set_options(const CompileOptions& opts)
{
    std::lock_guard lock(guard());
    GuardProbe probe;
    CompileOptions prev = options();
    options() = opts;
    return prev;
}

CompileOptions current_options()
{
    std::lock_guard lock(guard());
    return options();
}

IrResult compile_to_ir(const SourceUnit& src)
{
    std::lock_guard lock(guard());
    GuardProbe probe;
    IrResult r;
    r.guard_entered = Clock::now();
    Program prog = parse_program(src.text);
    check_entry_names(prog, src);
    r.ir.text = to_text(lower_program(prog, options()));
    r.guard_left = Clock::now();
    r.stage1_ms = ms_between(r.guard_entered, r.guard_left);
    return r;
}

ModuleResult ir_to_module(const StageOneIR& ir, const CodegenLimits& limits)
{
    auto t0 = Clock::now();
    ModuleResult r;
    r.module = generate_module(parse_ir(ir.text), limits);
    r.bytes = encode_module(r.module);
    r.stage2_ms = ms_between(t0, Clock::now());
    return r;
}

CompiledUnit compile_unit(const SourceUnit& src)
{
    auto ir = compile_to_ir(src);
    auto mod = ir_to_module(ir.ir);
    return {std::move(mod.module), std::move(mod.bytes), {ir.stage1_ms, mod.stage2_ms}};
}

GuardStats guard_stats()
{
    return {max_holders.load(), acquisitions.load()};
}

void reset_guard_stats()
{
    max_holders = 0;
    acquisitions = 0;
}

} // namespace gpc::kernelc
