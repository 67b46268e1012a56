#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpc/kernelc/ir.hpp"

namespace gpc::kernelc {

inline constexpr char module_magic[4] = {'G', 'P', 'C', 'M'};
inline constexpr std::uint16_t module_version = 1;

/// One encoded instruction word, little-endian on disk:
/// bits 0-7 opcode, 8-15 a, 16-23 b, 24-31 c, 32-63 immediate.
/// `const.f` is followed by a raw word holding the double's bits.
struct Word {
    Opcode op = Opcode::halt;
    std::uint8_t a = 0;
    std::uint8_t b = 0;
    std::uint8_t c = 0;
    std::uint32_t imm = 0;

    std::uint64_t pack() const
    {
        return static_cast<std::uint64_t>(op) | (std::uint64_t{a} << 8) | (std::uint64_t{b} << 16)
               | (std::uint64_t{c} << 24) | (std::uint64_t{imm} << 32);
    }

    static Word unpack(std::uint64_t w)
    {
        return {static_cast<Opcode>(w & 0xff), static_cast<std::uint8_t>(w >> 8), static_cast<std::uint8_t>(w >> 16),
                static_cast<std::uint8_t>(w >> 24), static_cast<std::uint32_t>(w >> 32)};
    }
};

struct ModuleEntry {
    std::string name;
    std::uint16_t register_count = 0;
    std::vector<std::uint64_t> code;

    friend bool operator==(const ModuleEntry&, const ModuleEntry&) = default;
};

struct ModuleBinary {
    std::vector<ModuleEntry> entries;

    const ModuleEntry* find(std::string_view name) const;
    friend bool operator==(const ModuleBinary&, const ModuleBinary&) = default;
};

class ModuleFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::byte> encode_module(const ModuleBinary& m);

/// Decodes and structurally validates a module: magic, version, sizes,
/// opcodes, jump targets and two-word constants.
ModuleBinary decode_module(std::span<const std::byte> bytes);

} // namespace gpc::kernelc
