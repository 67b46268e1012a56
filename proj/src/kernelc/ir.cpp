#include "gpc/kernelc/ir.hpp"

#include <array>
#include <charconv>
#include <map>

namespace gpc::kernelc {

namespace {

using S = OperandShape;

constexpr std::array<OpcodeInfo, static_cast<std::size_t>(Opcode::count_)> infos = {{
    {"halt", S::none},
    {"const.i", S::d_imm},
    {"const.f", S::d_fbits},
    {"mov", S::d_a},
    {"tid", S::d},
    {"add.i", S::d_a_b}, {"sub.i", S::d_a_b}, {"mul.i", S::d_a_b}, {"div.i", S::d_a_b}, {"rem.i", S::d_a_b},
    {"and.i", S::d_a_b}, {"or.i", S::d_a_b}, {"xor.i", S::d_a_b}, {"shl.i", S::d_a_b}, {"shr.i", S::d_a_b},
    {"neg.i", S::d_a}, {"not.i", S::d_a}, {"lnot", S::d_a}, {"tobool", S::d_a},
    {"add.f", S::d_a_b}, {"sub.f", S::d_a_b}, {"mul.f", S::d_a_b}, {"div.f", S::d_a_b},
    {"neg.f", S::d_a}, {"sqrt.f", S::d_a}, {"fabs.f", S::d_a},
    {"eq.i", S::d_a_b}, {"ne.i", S::d_a_b}, {"lt.i", S::d_a_b}, {"le.i", S::d_a_b}, {"gt.i", S::d_a_b}, {"ge.i", S::d_a_b},
    {"eq.f", S::d_a_b}, {"ne.f", S::d_a_b}, {"lt.f", S::d_a_b}, {"le.f", S::d_a_b}, {"gt.f", S::d_a_b}, {"ge.f", S::d_a_b},
    {"cvt.f.i", S::d_a},
    {"cvt.i.f", S::d_a},
    {"ld.i", S::d_slot_a}, {"ld.f", S::d_slot_a},
    {"ldu.i", S::d_slot_a}, {"ldu.f", S::d_slot_a},
    {"st.i", S::a}, {"st.f", S::a},
    {"jmp", S::label},
    {"brz", S::a_label},
    {"brnz", S::a_label},
    {"label", S::label},
    {"sld", S::reg_slot},
    {"sst", S::reg_slot},
}};

const std::map<std::string_view, Opcode, std::less<>>& mnemonic_table()
{
    static const auto table = [] {
        std::map<std::string_view, Opcode, std::less<>> m;
        for (std::size_t i = 0; i < infos.size(); ++i)
            m.emplace(infos[i].mnemonic, static_cast<Opcode>(i));
        return m;
    }();
    return table;
}

std::string hex64(std::uint64_t v)
{
    char buf[19] = "0x";
    auto [p, ec] = std::to_chars(buf + 2, buf + sizeof buf, v, 16);
    return std::string(buf, p);
}

void append_instr(std::string& out, const IrInstr& in)
{
    const auto& info = opcode_info(in.op);
    out += "  ";
    out += info.mnemonic;
    auto reg = [&](std::int32_t r) { out += '%'; out += std::to_string(r); };
    auto lab = [&](std::int64_t l) { out += 'L'; out += std::to_string(l); };
    switch (info.shape) {
    case S::none: break;
    case S::d: out += ' '; reg(in.dst); break;
    case S::d_imm: out += ' '; reg(in.dst); out += ", "; out += std::to_string(in.imm); break;
    case S::d_fbits:
        out += ' '; reg(in.dst); out += ", "; out += hex64(static_cast<std::uint64_t>(in.imm));
        break;
    case S::d_a: out += ' '; reg(in.dst); out += ", "; reg(in.a); break;
    case S::d_a_b: out += ' '; reg(in.dst); out += ", "; reg(in.a); out += ", "; reg(in.b); break;
    case S::d_slot_a:
        out += ' '; reg(in.dst); out += ", @"; out += std::to_string(in.imm); out += ", "; reg(in.a);
        break;
    case S::a: out += ' '; reg(in.a); break;
    case S::label: out += ' '; lab(in.imm); break;
    case S::a_label: out += ' '; reg(in.a); out += ", "; lab(in.imm); break;
    case S::reg_slot: out += ' '; reg(in.a); out += ", $"; out += std::to_string(in.imm); break;
    }
    out += '\n';
}

class LineReader {
public:
    LineReader(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw IrFormatError("ir line " + std::to_string(line_no_) + ": " + what);
    }

    void skip_space()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t'))
            ++pos_;
    }

    std::string_view word()
    {
        skip_space();
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != ',')
            ++pos_;
        if (start == pos_)
            fail("expected a token");
        return s_.substr(start, pos_ - start);
    }

    void comma()
    {
        skip_space();
        if (pos_ >= s_.size() || s_[pos_] != ',')
            fail("expected ','");
        ++pos_;
    }

    template <typename T>
    T number(std::string_view w, int base = 10)
    {
        T v{};
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v, base);
        if (ec != std::errc{} || p != w.data() + w.size())
            fail("bad number '" + std::string(w) + "'");
        return v;
    }

    std::int32_t reg()
    {
        auto w = word();
        if (w.size() < 2 || w[0] != '%')
            fail("expected register");
        return number<std::int32_t>(w.substr(1));
    }

    std::int64_t prefixed(char prefix)
    {
        auto w = word();
        if (w.size() < 2 || w[0] != prefix)
            fail(std::string("expected '") + prefix + "' operand");
        return number<std::int64_t>(w.substr(1));
    }

    std::int64_t imm() { return number<std::int64_t>(word()); }

    std::int64_t fbits()
    {
        auto w = word();
        if (w.size() < 3 || w.substr(0, 2) != "0x")
            fail("expected hex float bits");
        return static_cast<std::int64_t>(number<std::uint64_t>(w.substr(2), 16));
    }

    void end()
    {
        skip_space();
        if (pos_ != s_.size())
            fail("trailing characters");
    }

private:
    std::string_view s_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

} // namespace

const OpcodeInfo& opcode_info(Opcode op)
{
    return infos.at(static_cast<std::size_t>(op));
}

std::string to_text(const IrModule& m)
{
    std::string out;
    out += ".gpir 1 ";
    out += m.options_fingerprint;
    out += '\n';
    for (const auto& b : m.buffers) {
        out += ".buffer ";
        out += b.is_output ? "out " : "in ";
        out += b.is_float ? "float " : "int ";
        out += b.name;
        out += '\n';
    }
    out += ".entries ";
    out += std::to_string(m.entries.size());
    for (const auto& e : m.entries) {
        out += ' ';
        out += e.name;
    }
    out += '\n';
    for (const auto& e : m.entries) {
        out += ".entry ";
        out += e.name;
        out += " vregs=";
        out += std::to_string(e.vreg_count);
        out += '\n';
        for (const auto& in : e.code)
            append_instr(out, in);
        out += ".end\n";
    }
    return out;
}

IrModule parse_ir(std::string_view text)
{
    IrModule m;
    std::vector<std::string> table;
    bool have_table = false;
    bool header = false;
    IrEntry* current = nullptr;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.find_first_not_of(" \t") == std::string_view::npos)
            continue;

        LineReader r(line, line_no);
        auto head = r.word();
        if (!header) {
            if (head != ".gpir" || r.word() != "1")
                r.fail("missing `.gpir 1` header");
            m.options_fingerprint = std::string(r.word());
            r.end();
            header = true;
            continue;
        }
        if (head == ".entries") {
            if (current || have_table)
                r.fail("misplaced .entries");
            auto n = r.number<std::size_t>(r.word());
            for (std::size_t i = 0; i < n; ++i)
                table.emplace_back(r.word());
            r.end();
            have_table = true;
        } else if (head == ".buffer") {
            if (current)
                r.fail(".buffer inside entry");
            IrBuffer b;
            auto dir = r.word();
            auto ty = r.word();
            if ((dir != "in" && dir != "out") || (ty != "int" && ty != "float"))
                r.fail("malformed .buffer");
            b.is_output = dir == "out";
            b.is_float = ty == "float";
            b.name = std::string(r.word());
            r.end();
            m.buffers.push_back(std::move(b));
        } else if (head == ".entry") {
            if (current)
                r.fail("nested .entry");
            IrEntry e;
            e.name = std::string(r.word());
            auto v = r.word();
            if (v.substr(0, 6) != "vregs=")
                r.fail("expected vregs=");
            e.vreg_count = r.number<std::uint32_t>(v.substr(6));
            r.end();
            m.entries.push_back(std::move(e));
            current = &m.entries.back();
        } else if (head == ".end") {
            if (!current)
                r.fail(".end outside entry");
            r.end();
            current = nullptr;
        } else {
            if (!current)
                r.fail("instruction outside entry");
            auto it = mnemonic_table().find(head);
            if (it == mnemonic_table().end())
                r.fail("unknown mnemonic '" + std::string(head) + "'");
            IrInstr in;
            in.op = it->second;
            switch (opcode_info(in.op).shape) {
            case S::none: break;
            case S::d: in.dst = r.reg(); break;
            case S::d_imm: in.dst = r.reg(); r.comma(); in.imm = r.imm(); break;
            case S::d_fbits: in.dst = r.reg(); r.comma(); in.imm = r.fbits(); break;
            case S::d_a: in.dst = r.reg(); r.comma(); in.a = r.reg(); break;
            case S::d_a_b: in.dst = r.reg(); r.comma(); in.a = r.reg(); r.comma(); in.b = r.reg(); break;
            case S::d_slot_a: in.dst = r.reg(); r.comma(); in.imm = r.prefixed('@'); r.comma(); in.a = r.reg(); break;
            case S::a: in.a = r.reg(); break;
            case S::label: in.imm = r.prefixed('L'); break;
            case S::a_label: in.a = r.reg(); r.comma(); in.imm = r.prefixed('L'); break;
            case S::reg_slot: in.a = r.reg(); r.comma(); in.imm = r.prefixed('$'); break;
            }
            r.end();
            current->code.push_back(in);
        }
    }
    if (!header)
        throw IrFormatError("empty ir");
    if (current)
        throw IrFormatError("unterminated entry '" + current->name + "'");
    if (!have_table)
        throw IrFormatError("missing .entries table");
    if (table.size() != m.entries.size())
        throw IrFormatError("entry table lists " + std::to_string(table.size()) + " entries, module has "
                            + std::to_string(m.entries.size()));
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i] != m.entries[i].name)
            throw IrFormatError("entry table mismatch at " + std::to_string(i));
    return m;
}

} // namespace gpc::kernelc
