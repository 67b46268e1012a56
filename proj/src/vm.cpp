#include "gpc/vm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "gpc/kernelc/semantics.hpp"
#include "gpc/problems.hpp"

namespace gpc {

std::vector<HostArray> pad_rows(const std::vector<HostArray>& arrays, std::size_t rows)
{
    std::vector<HostArray> out = arrays;
    for (auto& a : out) {
        std::size_t have = a.rows();
        if (have == 0 || have >= rows)
            continue;
        auto extend = [&](auto& v) {
            auto last = std::vector(v.end() - static_cast<std::ptrdiff_t>(a.row_width), v.end());
            for (std::size_t r = have; r < rows; ++r)
                v.insert(v.end(), last.begin(), last.end());
        };
        if (a.is_float)
            extend(a.floats);
        else
            extend(a.ints);
    }
    return out;
}

} // namespace gpc

namespace gpc::vm {

using kernelc::Opcode;
using kernelc::Word;

namespace {

struct Prepared {
    std::vector<Word> code;
    std::vector<std::uint64_t> raw;
    std::size_t registers = 0;
    std::size_t spill_slots = 0;
};

Prepared prepare(const kernelc::ModuleEntry& e, const DeviceBuffers& bufs)
{
    Prepared p;
    p.registers = e.register_count;
    p.raw = e.code;
    p.code.reserve(e.code.size());
    auto reg_ok = [&](std::uint8_t r) { return r < p.registers; };
    auto fail = [&](std::size_t pc, const std::string& what) {
        throw LaunchError("entry '" + e.name + "' at " + std::to_string(pc) + ": " + what);
    };
    for (std::size_t pc = 0; pc < e.code.size(); ++pc) {
        Word w = Word::unpack(e.code[pc]);
        p.code.push_back(w);
        const auto shape = kernelc::opcode_info(w.op).shape;
        using S = kernelc::OperandShape;
        bool ok = true;
        switch (shape) {
        case S::none:
        case S::label: break;
        case S::d:
        case S::d_imm:
        case S::d_fbits:
        case S::a:
        case S::a_label:
        case S::reg_slot: ok = reg_ok(w.a); break;
        case S::d_a:
        case S::d_slot_a: ok = reg_ok(w.a) && reg_ok(w.b); break;
        case S::d_a_b: ok = reg_ok(w.a) && reg_ok(w.b) && reg_ok(w.c); break;
        }
        if (!ok)
            fail(pc, "register beyond register count");
        switch (w.op) {
        case Opcode::ld_i:
        case Opcode::ld_f:
        case Opcode::ldu_i:
        case Opcode::ldu_f: {
            if (w.imm >= bufs.inputs.size())
                fail(pc, "input slot " + std::to_string(w.imm) + " not bound");
            bool want_float = w.op == Opcode::ld_f || w.op == Opcode::ldu_f;
            if (bufs.inputs[w.imm].is_float != want_float)
                fail(pc, "input '" + bufs.inputs[w.imm].name + "' element type mismatch");
            break;
        }
        case Opcode::st_i:
        case Opcode::st_f:
            if ((w.op == Opcode::st_f) != bufs.output_is_float)
                fail(pc, "output element type mismatch");
            break;
        case Opcode::spill_ld:
        case Opcode::spill_st: p.spill_slots = std::max<std::size_t>(p.spill_slots, std::size_t{w.imm} + 1); break;
        case Opcode::const_f:
            ++pc;
            p.code.push_back(Word{});
            break;
        default: break;
        }
    }
    return p;
}

struct ThreadOutcome {
    ThreadStatus status = ThreadStatus::ok;
    double value = 0.0;
    std::uint64_t executed = 0;
};

class Machine {
public:
    Machine(const Prepared& p, const DeviceBuffers& bufs, std::uint64_t budget)
        : p_(p), bufs_(bufs), budget_(budget), regs_(p.registers), slots_(p.spill_slots)
    {
    }

    ThreadOutcome run(std::int32_t tid)
    {
        std::fill(regs_.begin(), regs_.end(), 0);
        std::fill(slots_.begin(), slots_.end(), 0);
        ThreadOutcome out;
        const std::size_t n = p_.code.size();
        std::size_t pc = 0;
        std::uint64_t executed = 0;
        double stored = 0.0;

        auto I = [&](std::uint8_t r) { return static_cast<std::int32_t>(regs_[r]); };
        auto F = [&](std::uint8_t r) { return std::bit_cast<double>(regs_[r]); };
        auto setI = [&](std::uint8_t r, std::int32_t v) { regs_[r] = static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); };
        auto setF = [&](std::uint8_t r, double v) { regs_[r] = std::bit_cast<std::uint64_t>(v); };
        auto fault = [&] {
            out.status = ThreadStatus::fault;
            out.executed = executed;
            return out;
        };

        while (pc < n) {
            if (executed == budget_) {
                out.status = ThreadStatus::budget_exhausted;
                out.executed = executed;
                return out;
            }
            ++executed;
            const Word w = p_.code[pc];
            std::size_t next = pc + 1;
            switch (w.op) {
            case Opcode::halt: next = n; break;
            case Opcode::const_i: setI(w.a, static_cast<std::int32_t>(w.imm)); break;
            case Opcode::const_f:
                regs_[w.a] = p_.raw[pc + 1];
                next = pc + 2;
                break;
            case Opcode::mov: regs_[w.a] = regs_[w.b]; break;
            case Opcode::tid: setI(w.a, tid); break;
            case Opcode::add_i: setI(w.a, kernelc::sem::add(I(w.b), I(w.c))); break;
            case Opcode::sub_i: setI(w.a, kernelc::sem::sub(I(w.b), I(w.c))); break;
            case Opcode::mul_i: setI(w.a, kernelc::sem::mul(I(w.b), I(w.c))); break;
            case Opcode::div_i: {
                auto v = kernelc::sem::div(I(w.b), I(w.c));
                if (!v)
                    return fault();
                setI(w.a, *v);
                break;
            }
            case Opcode::rem_i: {
                auto v = kernelc::sem::rem(I(w.b), I(w.c));
                if (!v)
                    return fault();
                setI(w.a, *v);
                break;
            }
            case Opcode::and_i: setI(w.a, I(w.b) & I(w.c)); break;
            case Opcode::or_i: setI(w.a, I(w.b) | I(w.c)); break;
            case Opcode::xor_i: setI(w.a, I(w.b) ^ I(w.c)); break;
            case Opcode::shl_i: setI(w.a, kernelc::sem::shl(I(w.b), I(w.c))); break;
            case Opcode::shr_i: setI(w.a, kernelc::sem::shr(I(w.b), I(w.c))); break;
            case Opcode::neg_i: setI(w.a, kernelc::sem::neg(I(w.b))); break;
            case Opcode::not_i: setI(w.a, ~I(w.b)); break;
            case Opcode::lnot: setI(w.a, I(w.b) == 0 ? 1 : 0); break;
            case Opcode::to_bool: setI(w.a, I(w.b) != 0 ? 1 : 0); break;
            case Opcode::add_f: setF(w.a, F(w.b) + F(w.c)); break;
            case Opcode::sub_f: setF(w.a, F(w.b) - F(w.c)); break;
            case Opcode::mul_f: setF(w.a, F(w.b) * F(w.c)); break;
            case Opcode::div_f: setF(w.a, F(w.b) / F(w.c)); break;
            case Opcode::neg_f: setF(w.a, -F(w.b)); break;
            case Opcode::sqrt_f: setF(w.a, std::sqrt(F(w.b))); break;
            case Opcode::fabs_f: setF(w.a, std::fabs(F(w.b))); break;
            case Opcode::eq_i: setI(w.a, I(w.b) == I(w.c)); break;
            case Opcode::ne_i: setI(w.a, I(w.b) != I(w.c)); break;
            case Opcode::lt_i: setI(w.a, I(w.b) < I(w.c)); break;
            case Opcode::le_i: setI(w.a, I(w.b) <= I(w.c)); break;
            case Opcode::gt_i: setI(w.a, I(w.b) > I(w.c)); break;
            case Opcode::ge_i: setI(w.a, I(w.b) >= I(w.c)); break;
            case Opcode::eq_f: setI(w.a, F(w.b) == F(w.c)); break;
            case Opcode::ne_f: setI(w.a, F(w.b) != F(w.c)); break;
            case Opcode::lt_f: setI(w.a, F(w.b) < F(w.c)); break;
            case Opcode::le_f: setI(w.a, F(w.b) <= F(w.c)); break;
            case Opcode::gt_f: setI(w.a, F(w.b) > F(w.c)); break;
            case Opcode::ge_f: setI(w.a, F(w.b) >= F(w.c)); break;
            case Opcode::cvt_f_i: setF(w.a, static_cast<double>(I(w.b))); break;
            case Opcode::cvt_i_f: {
                auto v = kernelc::sem::float_to_int(F(w.b));
                if (!v)
                    return fault();
                setI(w.a, *v);
                break;
            }
            case Opcode::ld_i:
            case Opcode::ld_f:
            case Opcode::ldu_i:
            case Opcode::ldu_f: {
                const HostArray& arr = bufs_.inputs[w.imm];
                std::int32_t idx = I(w.b);
                bool in_range = idx >= 0 && static_cast<std::size_t>(idx) < arr.size();
                bool checked = w.op == Opcode::ld_i || w.op == Opcode::ld_f;
                bool is_f = w.op == Opcode::ld_f || w.op == Opcode::ldu_f;
                if (!in_range) {
                    if (checked)
                        return fault();
                    regs_[w.a] = 0;
                } else if (is_f) {
                    setF(w.a, arr.floats[static_cast<std::size_t>(idx)]);
                } else {
                    setI(w.a, arr.ints[static_cast<std::size_t>(idx)]);
                }
                break;
            }
            case Opcode::st_i: stored = static_cast<double>(I(w.a)); break;
            case Opcode::st_f: stored = F(w.a); break;
            case Opcode::jmp: next = w.imm; break;
            case Opcode::brz:
                if (I(w.a) == 0)
                    next = w.imm;
                break;
            case Opcode::brnz:
                if (I(w.a) != 0)
                    next = w.imm;
                break;
            case Opcode::spill_ld: regs_[w.a] = slots_[w.imm]; break;
            case Opcode::spill_st: slots_[w.imm] = regs_[w.a]; break;
            case Opcode::label:
            case Opcode::count_: return fault();
            }
            pc = next;
        }
        out.value = stored;
        out.executed = executed;
        return out;
    }

private:
    const Prepared& p_;
    const DeviceBuffers& bufs_;
    std::uint64_t budget_;
    std::vector<std::uint64_t> regs_;
    std::vector<std::uint64_t> slots_;
};

ExecResult launch_padded(const kernelc::ModuleEntry& entry, const LaunchConfig& cfg, const DeviceBuffers& bufs)
{
    Prepared prep = prepare(entry, bufs);
    const std::size_t total = allocated_threads(cfg.requested_threads);

    ExecResult r;
    r.allocated_threads = total;
    r.outputs.assign(cfg.requested_threads, 0.0);
    r.status.assign(cfg.requested_threads, ThreadStatus::ok);
    r.executed.assign(total, 0);

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle_seed) {
        std::mt19937_64 rng(*cfg.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    const double bad = sentinel(bufs.output_is_float);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        Machine m(prep, bufs, cfg.instruction_budget);
        for (std::size_t k = begin; k < end; ++k) {
            std::size_t tid = order[k];
            ThreadOutcome t = m.run(static_cast<std::int32_t>(tid));
            r.executed[tid] = t.executed;
            if (tid >= cfg.requested_threads)
                continue; // output disabled
            r.status[tid] = t.status;
            r.outputs[tid] = t.status == ThreadStatus::ok ? t.value : bad;
        }
    };

    unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(total)));
    if (workers <= 1 || total == 0) {
        run_range(0, total);
    } else {
        std::vector<std::jthread> pool;
        std::size_t chunk = (total + workers - 1) / workers;
        for (std::size_t b = 0; b < total; b += chunk)
            pool.emplace_back(run_range, b, std::min(total, b + chunk));
    }
    return r;
}

} // namespace

double sentinel(bool output_is_float)
{
    return output_is_float ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(INT32_MIN);
}

ExecResult launch(const kernelc::ModuleBinary& m, const LaunchConfig& cfg, const DeviceBuffers& bufs)
{
    const kernelc::ModuleEntry* entry = m.find(cfg.entry);
    if (!entry)
        throw LaunchError("no entry named '" + cfg.entry + "'");
    for (const auto& a : bufs.inputs)
        if (a.rows() < cfg.requested_threads)
            throw LaunchError("input '" + a.name + "' has " + std::to_string(a.rows()) + " rows for "
                              + std::to_string(cfg.requested_threads) + " threads");
    const std::size_t total = allocated_threads(cfg.requested_threads);
    bool needs_pad = std::any_of(bufs.inputs.begin(), bufs.inputs.end(), [&](const HostArray& a) { return a.rows() < total; });
    if (!needs_pad)
        return launch_padded(*entry, cfg, bufs);
    DeviceBuffers padded{pad_rows(bufs.inputs, total), bufs.output_is_float};
    return launch_padded(*entry, cfg, padded);
}

OutputMatrix run_population(std::span<const kernelc::ModuleBinary> modules, const problems::ProblemSpec& p,
                            const problems::TestSuite& suite, std::uint64_t instruction_budget)
{
    OutputMatrix out;
    out.cols = suite.case_count;
    for (const auto& m : modules)
        out.rows += m.entries.size();
    out.values.reserve(out.rows * out.cols);
    out.status.reserve(out.rows * out.cols);
    if (out.rows == 0)
        return out;

    DeviceBuffers bufs{pad_rows(suite.inputs, allocated_threads(suite.case_count)), p.output_is_float()};
    LaunchConfig cfg;
    cfg.requested_threads = suite.case_count;
    cfg.instruction_budget = instruction_budget;
    for (const auto& m : modules) {
        for (const auto& e : m.entries) {
            cfg.entry = e.name;
            ExecResult r = launch_padded(e, cfg, bufs);
            out.values.insert(out.values.end(), r.outputs.begin(), r.outputs.end());
            out.status.insert(out.status.end(), r.status.begin(), r.status.end());
        }
    }
    return out;
}

} // namespace gpc::vm
