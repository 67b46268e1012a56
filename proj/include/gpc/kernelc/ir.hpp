#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpc::kernelc {

/// Opcodes shared by the stage-one IR and the encoded module. The last two
/// (spill traffic) only appear after register allocation.
enum class Opcode : std::uint8_t {
    halt,
    const_i,   // dst <- imm
    const_f,   // dst <- bits (two words when encoded)
    mov,
    tid,
    add_i, sub_i, mul_i, div_i, rem_i,
    and_i, or_i, xor_i, shl_i, shr_i,
    neg_i, not_i, lnot, to_bool,
    add_f, sub_f, mul_f, div_f, neg_f, sqrt_f, fabs_f,
    eq_i, ne_i, lt_i, le_i, gt_i, ge_i,
    eq_f, ne_f, lt_f, le_f, gt_f, ge_f,
    cvt_f_i,   // int -> float
    cvt_i_f,   // float -> int (faults on NaN / out of range)
    ld_i, ld_f,   // bounds-checked input load
    ldu_i, ldu_f, // unchecked input load: out-of-range reads 0
    st_i, st_f,   // out[tid] <- src
    jmp,
    brz,
    brnz,
    label,     // IR only
    spill_ld,  // module only: reg <- slot
    spill_st,  // module only: slot <- reg
    count_,
};

enum class OperandShape : std::uint8_t {
    none,      // halt
    d,         // tid
    d_imm,     // const.i
    d_fbits,   // const.f
    d_a,       // unary
    d_a_b,     // binary
    d_slot_a,  // loads
    a,         // stores
    label,     // jmp / label
    a_label,   // brz / brnz
    reg_slot,  // spills
};

struct OpcodeInfo {
    std::string_view mnemonic;
    OperandShape shape;
};

const OpcodeInfo& opcode_info(Opcode op);

struct IrInstr {
    Opcode op = Opcode::halt;
    std::int32_t dst = -1;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int64_t imm = 0; // int constant, float bits, buffer slot or label id

    friend bool operator==(const IrInstr&, const IrInstr&) = default;
};

struct IrEntry {
    std::string name;
    std::uint32_t vreg_count = 0;
    std::vector<IrInstr> code;

    friend bool operator==(const IrEntry&, const IrEntry&) = default;
};

struct IrBuffer {
    std::string name;
    bool is_float = false;
    bool is_output = false;

    friend bool operator==(const IrBuffer&, const IrBuffer&) = default;
};

struct IrModule {
    std::string options_fingerprint;
    std::vector<IrBuffer> buffers;
    std::vector<IrEntry> entries;

    friend bool operator==(const IrModule&, const IrModule&) = default;
};

class IrFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Textual form:
///
///     .gpir 1 <fingerprint>
///     .buffer in int list
///     .buffer out int out
///     .entries 1 ind_0
///     .entry ind_0 vregs=3
///       const.i %0, 1
///       ...
///     .end
std::string to_text(const IrModule& m);
IrModule parse_ir(std::string_view text);

} // namespace gpc::kernelc
