#include <algorithm>
#include <bit>

#include "gpc/kernelc/compiler.hpp"

namespace gpc::kernelc {

namespace {

class Bitset {
public:
    explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}

    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

    // Returns true when any bit changed.
    bool merge(const Bitset& o)
    {
        bool changed = false;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t w = words_[i] | o.words_[i];
            changed |= w != words_[i];
            words_[i] = w;
        }
        return changed;
    }

    template <typename F>
    void for_each(F&& f) const
    {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t w = words_[i];
            while (w) {
                int bit = std::countr_zero(w);
                f(i * 64 + static_cast<std::size_t>(bit));
                w &= w - 1;
            }
        }
    }

    friend bool operator==(const Bitset&, const Bitset&) = default;

private:
    std::vector<std::uint64_t> words_;
};

struct Operands {
    std::int32_t def = -1;
    std::int32_t use[2] = {-1, -1};
};

Operands operands_of(const IrInstr& in)
{
    Operands o;
    switch (opcode_info(in.op).shape) {
    case OperandShape::d:
    case OperandShape::d_imm:
    case OperandShape::d_fbits: o.def = in.dst; break;
    case OperandShape::d_a:
    case OperandShape::d_slot_a: o.def = in.dst; o.use[0] = in.a; break;
    case OperandShape::d_a_b: o.def = in.dst; o.use[0] = in.a; o.use[1] = in.b; break;
    case OperandShape::a:
    case OperandShape::a_label: o.use[0] = in.a; break;
    case OperandShape::none:
    case OperandShape::label:
    case OperandShape::reg_slot: break;
    }
    return o;
}

bool ends_block(Opcode op)
{
    return op == Opcode::jmp || op == Opcode::brz || op == Opcode::brnz || op == Opcode::halt;
}

class EntryCodegen {
public:
    EntryCodegen(const IrEntry& e, const CodegenLimits& limits) : entry_(e), limits_(limits) {}

    ModuleEntry run()
    {
        strip_labels();
        check_registers();
        build_blocks();
        liveness();
        interference();
        allocate();
        return encode();
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw CodegenError("entry '" + entry_.name + "': " + msg);
    }

    void strip_labels()
    {
        std::vector<std::size_t> label_pos;
        for (const auto& in : entry_.code) {
            if (in.op == Opcode::label) {
                if (in.imm < 0 || in.imm > 1'000'000)
                    fail("bad label id");
                auto id = static_cast<std::size_t>(in.imm);
                if (label_pos.size() <= id)
                    label_pos.resize(id + 1, SIZE_MAX);
                if (label_pos[id] != SIZE_MAX)
                    fail("label L" + std::to_string(id) + " defined twice");
                label_pos[id] = code_.size();
            } else if (in.op == Opcode::spill_ld || in.op == Opcode::spill_st) {
                fail("spill instruction in IR");
            } else {
                code_.push_back(in);
            }
        }
        target_.assign(code_.size(), 0);
        for (std::size_t i = 0; i < code_.size(); ++i) {
            Opcode op = code_[i].op;
            if (op != Opcode::jmp && op != Opcode::brz && op != Opcode::brnz)
                continue;
            auto id = code_[i].imm;
            if (id < 0 || static_cast<std::size_t>(id) >= label_pos.size() || label_pos[id] == SIZE_MAX)
                fail("undefined label L" + std::to_string(id));
            target_[i] = label_pos[static_cast<std::size_t>(id)];
        }
    }

    void check_registers() const
    {
        for (const auto& in : code_) {
            Operands o = operands_of(in);
            for (auto r : {o.def, o.use[0], o.use[1]})
                if (r < -1 || (r >= 0 && static_cast<std::uint32_t>(r) >= entry_.vreg_count))
                    fail("register %" + std::to_string(r) + " out of range");
            auto shape = opcode_info(in.op).shape;
            bool needs_def = shape == OperandShape::d || shape == OperandShape::d_imm || shape == OperandShape::d_fbits
                             || shape == OperandShape::d_a || shape == OperandShape::d_a_b
                             || shape == OperandShape::d_slot_a;
            if (needs_def && o.def < 0)
                fail("missing destination register");
            if (shape == OperandShape::d_slot_a && (in.imm < 0 || in.imm > UINT32_MAX))
                fail("bad buffer slot");
            if (shape == OperandShape::d_imm && (in.imm < INT32_MIN || in.imm > INT32_MAX))
                fail("integer constant out of range");
        }
    }

    void build_blocks()
    {
        const std::size_t n = code_.size();
        std::vector<bool> leader(n + 1, false);
        leader[0] = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (ends_block(code_[i].op))
                leader[i + 1] = true;
            Opcode op = code_[i].op;
            if (op == Opcode::jmp || op == Opcode::brz || op == Opcode::brnz)
                leader[target_[i]] = true;
        }
        block_of_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (leader[i])
                blocks_.push_back({i, i, {}});
            blocks_.back().end = i + 1;
            block_of_[i] = blocks_.size() - 1;
        }
        for (auto& b : blocks_) {
            const IrInstr& last = code_[b.end - 1];
            std::size_t last_idx = b.end - 1;
            auto add = [&](std::size_t target) {
                if (target < n)
                    b.succ.push_back(block_of_[target]);
            };
            switch (last.op) {
            case Opcode::halt: break;
            case Opcode::jmp: add(target_[last_idx]); break;
            case Opcode::brz:
            case Opcode::brnz:
                add(target_[last_idx]);
                add(b.end);
                break;
            default: add(b.end); break;
            }
        }
    }

    void liveness()
    {
        const std::size_t v = entry_.vreg_count;
        live_in_.assign(blocks_.size(), Bitset(v));
        live_out_.assign(blocks_.size(), Bitset(v));
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t bi = blocks_.size(); bi-- > 0;) {
                const auto& b = blocks_[bi];
                Bitset out(v);
                for (auto s : b.succ)
                    out.merge(live_in_[s]);
                Bitset in = out;
                for (std::size_t i = b.end; i-- > b.begin;) {
                    Operands o = operands_of(code_[i]);
                    if (o.def >= 0)
                        in.reset(static_cast<std::size_t>(o.def));
                    for (auto u : o.use)
                        if (u >= 0)
                            in.set(static_cast<std::size_t>(u));
                }
                if (!(out == live_out_[bi])) {
                    live_out_[bi] = std::move(out);
                    changed = true;
                }
                if (!(in == live_in_[bi])) {
                    live_in_[bi] = std::move(in);
                    changed = true;
                }
            }
        }
    }

    void add_edge(std::size_t a, std::size_t b)
    {
        if (a == b)
            return;
        adj_[a].push_back(static_cast<std::uint32_t>(b));
        adj_[b].push_back(static_cast<std::uint32_t>(a));
    }

    void interference()
    {
        const std::size_t v = entry_.vreg_count;
        adj_.assign(v, {});
        used_.assign(v, false);
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            const auto& b = blocks_[bi];
            Bitset live = live_out_[bi];
            for (std::size_t i = b.end; i-- > b.begin;) {
                Operands o = operands_of(code_[i]);
                if (o.def >= 0) {
                    auto d = static_cast<std::size_t>(o.def);
                    used_[d] = true;
                    live.for_each([&](std::size_t other) { add_edge(d, other); });
                    live.reset(d);
                }
                for (auto u : o.use)
                    if (u >= 0) {
                        used_[static_cast<std::size_t>(u)] = true;
                        live.set(static_cast<std::size_t>(u));
                    }
            }
        }
        // Values live on entry share the start of the entry.
        if (!blocks_.empty()) {
            std::vector<std::size_t> entry_live;
            live_in_[0].for_each([&](std::size_t r) { entry_live.push_back(r); });
            for (std::size_t i = 0; i < entry_live.size(); ++i)
                for (std::size_t j = i + 1; j < entry_live.size(); ++j)
                    add_edge(entry_live[i], entry_live[j]);
        }
        for (auto& a : adj_) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
    }

    bool try_color(unsigned colors, bool allow_spill)
    {
        const std::size_t v = entry_.vreg_count;
        color_.assign(v, -1);
        slot_.assign(v, -1);
        spill_count_ = 0;
        std::vector<bool> taken(colors);
        for (std::size_t r = 0; r < v; ++r) {
            if (!used_[r])
                continue;
            std::fill(taken.begin(), taken.end(), false);
            for (auto n : adj_[r])
                if (color_[n] >= 0)
                    taken[static_cast<std::size_t>(color_[n])] = true;
            auto free = std::find(taken.begin(), taken.end(), false);
            if (free != taken.end()) {
                color_[r] = static_cast<int>(free - taken.begin());
                continue;
            }
            if (!allow_spill)
                return false;
            if (spill_count_ >= limits_.max_spill_slots)
                fail("spill slot overflow (limit " + std::to_string(limits_.max_spill_slots) + ")");
            slot_[r] = static_cast<int>(spill_count_++);
        }
        return true;
    }

    void allocate()
    {
        unsigned k = limits_.max_registers;
        if (k == 0 || k > 256)
            fail("register file size must be in [1, 256]");
        if (try_color(k, false)) {
            scratch_base_ = -1;
            return;
        }
        if (k < 4)
            fail("register overflow: " + std::to_string(k) + " registers cannot hold the spill scratch set");
        try_color(k - 3, true);
        scratch_base_ = static_cast<int>(k - 3);
    }

    std::uint8_t phys(std::int32_t vreg) const { return static_cast<std::uint8_t>(color_[static_cast<std::size_t>(vreg)]); }
    bool spilled(std::int32_t vreg) const { return vreg >= 0 && slot_[static_cast<std::size_t>(vreg)] >= 0; }

    std::size_t words_for(const IrInstr& in) const
    {
        Operands o = operands_of(in);
        std::size_t n = 1;
        for (auto u : o.use)
            n += spilled(u) ? 1 : 0;
        n += spilled(o.def) ? 1 : 0;
        n += in.op == Opcode::const_f ? 1 : 0;
        return n;
    }

    ModuleEntry encode()
    {
        ModuleEntry out;
        out.name = entry_.name;

        std::vector<std::size_t> offset(code_.size() + 1, 0);
        for (std::size_t i = 0; i < code_.size(); ++i)
            offset[i + 1] = offset[i] + words_for(code_[i]);

        int max_reg = -1;
        auto note = [&](std::uint8_t r) { max_reg = std::max(max_reg, static_cast<int>(r)); };
        auto slot_imm = [&](std::int32_t vreg) { return static_cast<std::uint32_t>(slot_[static_cast<std::size_t>(vreg)]); };

        for (std::size_t i = 0; i < code_.size(); ++i) {
            const IrInstr& in = code_[i];
            Operands o = operands_of(in);
            std::uint8_t src[2] = {0, 0};
            for (int k = 0; k < 2; ++k) {
                std::int32_t u = o.use[k];
                if (u < 0)
                    continue;
                if (spilled(u)) {
                    src[k] = static_cast<std::uint8_t>(scratch_base_ + k);
                    out.code.push_back(Word{Opcode::spill_ld, src[k], 0, 0, slot_imm(u)}.pack());
                } else {
                    src[k] = phys(u);
                }
                note(src[k]);
            }
            std::uint8_t dst = 0;
            if (o.def >= 0) {
                dst = spilled(o.def) ? static_cast<std::uint8_t>(scratch_base_ + 2) : phys(o.def);
                note(dst);
            }

            Word w;
            w.op = in.op;
            switch (opcode_info(in.op).shape) {
            case OperandShape::none: break;
            case OperandShape::d: w.a = dst; break;
            case OperandShape::d_imm: w.a = dst; w.imm = static_cast<std::uint32_t>(in.imm); break;
            case OperandShape::d_fbits: w.a = dst; break;
            case OperandShape::d_a: w.a = dst; w.b = src[0]; break;
            case OperandShape::d_a_b: w.a = dst; w.b = src[0]; w.c = src[1]; break;
            case OperandShape::d_slot_a: w.a = dst; w.b = src[0]; w.imm = static_cast<std::uint32_t>(in.imm); break;
            case OperandShape::a: w.a = src[0]; break;
            case OperandShape::label: w.imm = static_cast<std::uint32_t>(offset[target_[i]]); break;
            case OperandShape::a_label:
                w.a = src[0];
                w.imm = static_cast<std::uint32_t>(offset[target_[i]]);
                break;
            case OperandShape::reg_slot: break;
            }
            out.code.push_back(w.pack());
            if (in.op == Opcode::const_f)
                out.code.push_back(static_cast<std::uint64_t>(in.imm));
            if (spilled(o.def))
                out.code.push_back(Word{Opcode::spill_st, dst, 0, 0, slot_imm(o.def)}.pack());
        }
        out.register_count = static_cast<std::uint16_t>(max_reg + 1);
        return out;
    }

    struct Block {
        std::size_t begin;
        std::size_t end;
        std::vector<std::size_t> succ;
    };

    const IrEntry& entry_;
    const CodegenLimits& limits_;
    std::vector<IrInstr> code_;
    std::vector<std::size_t> target_;
    std::vector<Block> blocks_;
    std::vector<std::size_t> block_of_;
    std::vector<Bitset> live_in_;
    std::vector<Bitset> live_out_;
    std::vector<std::vector<std::uint32_t>> adj_;
    std::vector<bool> used_;
    std::vector<int> color_;
    std::vector<int> slot_;
    unsigned spill_count_ = 0;
    int scratch_base_ = -1;
};

} // namespace

ModuleBinary generate_module(const IrModule& ir, const CodegenLimits& limits)
{
    ModuleBinary m;
    m.entries.reserve(ir.entries.size());
    for (const auto& e : ir.entries)
        m.entries.push_back(EntryCodegen(e, limits).run());
    return m;
}

} // namespace gpc::kernelc
