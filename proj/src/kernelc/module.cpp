#include "gpc/kernelc/module.hpp"

#include <cstring>

namespace gpc::kernelc {

namespace {

template <typename T>
void put(std::vector<std::byte>& out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::span<const std::byte> b) : b_(b) {}

    template <typename T>
    T get(const char* what)
    {
        if (b_.size() - pos_ < sizeof(T))
            throw ModuleFormatError(std::string("truncated module reading ") + what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(b_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    std::string bytes(std::size_t n)
    {
        if (b_.size() - pos_ < n)
            throw ModuleFormatError("truncated module reading entry name");
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == b_.size(); }

private:
    std::span<const std::byte> b_;
    std::size_t pos_ = 0;
};

void validate_code(const ModuleEntry& e)
{
    const auto n = e.code.size();
    for (std::size_t pc = 0; pc < n; ++pc) {
        Word w = Word::unpack(e.code[pc]);
        auto raw = static_cast<std::uint8_t>(e.code[pc] & 0xff);
        if (raw >= static_cast<std::uint8_t>(Opcode::count_) || w.op == Opcode::label)
            throw ModuleFormatError("entry '" + e.name + "': bad opcode " + std::to_string(raw) + " at " + std::to_string(pc));
        switch (w.op) {
        case Opcode::const_f:
            if (++pc >= n)
                throw ModuleFormatError("entry '" + e.name + "': truncated float constant");
            break;
        case Opcode::jmp:
        case Opcode::brz:
        case Opcode::brnz:
            if (w.imm > n)
                throw ModuleFormatError("entry '" + e.name + "': jump target out of range");
            break;
        default: break;
        }
    }
}

} // namespace

const ModuleEntry* ModuleBinary::find(std::string_view name) const
{
    for (const auto& e : entries)
        if (e.name == name)
            return &e;
    return nullptr;
}

std::vector<std::byte> encode_module(const ModuleBinary& m)
{
    std::vector<std::byte> out;
    for (char c : module_magic)
        out.push_back(static_cast<std::byte>(c));
    put<std::uint16_t>(out, module_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.entries.size()));
    for (const auto& e : m.entries) {
        if (e.name.size() > UINT16_MAX)
            throw ModuleFormatError("entry name too long");
        put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
        for (char c : e.name)
            out.push_back(static_cast<std::byte>(c));
        put<std::uint16_t>(out, e.register_count);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.code.size()));
        for (auto w : e.code)
            put<std::uint64_t>(out, w);
    }
    return out;
}

ModuleBinary decode_module(std::span<const std::byte> bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), module_magic, 4) != 0)
        throw ModuleFormatError("bad module magic");
    Reader r(bytes.subspan(4));
    auto version = r.get<std::uint16_t>("version");
    if (version != module_version)
        throw ModuleFormatError("unsupported module version " + std::to_string(version));
    auto count = r.get<std::uint32_t>("entry count");
    ModuleBinary m;
    for (std::uint32_t i = 0; i < count; ++i) {
        ModuleEntry e;
        auto len = r.get<std::uint16_t>("name length");
        e.name = r.bytes(len);
        e.register_count = r.get<std::uint16_t>("register count");
        auto n = r.get<std::uint32_t>("instruction count");
        if (n > bytes.size() / 8)
            throw ModuleFormatError("instruction count exceeds module size");
        e.code.resize(n);
        for (auto& w : e.code)
            w = r.get<std::uint64_t>("instruction");
        validate_code(e);
        m.entries.push_back(std::move(e));
    }
    if (!r.done())
        throw ModuleFormatError("trailing bytes after last entry");
    return m;
}

} // namespace gpc::kernelc
