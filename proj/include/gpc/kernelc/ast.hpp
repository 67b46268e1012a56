#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gpc::kernelc {

/// Scalar types of the kernel language. `float` is IEEE binary64.
enum class Type : std::uint8_t { void_, int_, float_, bool_ };

std::string_view type_name(Type t);

struct SourceLoc {
    int line = 0;
    int column = 0;
};

enum class ExprKind : std::uint8_t {
    int_lit,
    float_lit,
    bool_lit,
    var,
    load,    // input buffer element: name[index]
    tid,
    unary,
    binary,
    call,    // sqrt / fabs
    convert, // explicit cast or conversion inserted by the checker
};

enum class Op : std::uint8_t {
    add, sub, mul, div, rem,
    bit_and, bit_or, bit_xor, shl, shr,
    eq, ne, lt, le, gt, ge,
    log_and, log_or,
    neg, log_not, bit_not,
    sqrt, fabs,
};

std::string_view op_spelling(Op op);

struct Expr {
    ExprKind kind{};
    SourceLoc loc;
    Type type = Type::void_; // filled by the checker
    Op op{};
    std::int32_t int_value = 0;
    double float_value = 0.0;
    std::string name;
    int ref = -1; // local id for var, input slot for load
    std::vector<std::unique_ptr<Expr>> args;
};

using ExprPtr = std::unique_ptr<Expr>;

enum class StmtKind : std::uint8_t {
    decl,
    assign,    // local = value
    store_out, // out[tid] = value
    ret,       // store_out followed by halt
    if_,
    for_,
    while_,
    block,
    break_,
    continue_,
};

struct Stmt {
    StmtKind kind{};
    SourceLoc loc;
    Type decl_type = Type::void_;
    std::string name;
    int ref = -1; // local id
    ExprPtr value; // initializer / assigned value / returned value
    ExprPtr cond;
    std::unique_ptr<Stmt> init;
    std::unique_ptr<Stmt> step;
    std::unique_ptr<Stmt> then_branch; // if-then, loop body
    std::unique_ptr<Stmt> else_branch;
    std::vector<std::unique_ptr<Stmt>> body; // block
};

using StmtPtr = std::unique_ptr<Stmt>;

struct BufferDecl {
    std::string name;
    Type elem = Type::int_;
    bool is_output = false;
    int slot = -1; // input slot, in declaration order; -1 for the output
    SourceLoc loc;
};

struct EntryDecl {
    std::string name;
    SourceLoc loc;
    StmtPtr body;
    std::vector<Type> local_types; // indexed by local id
};

struct Program {
    std::vector<BufferDecl> buffers;
    std::vector<EntryDecl> entries;

    const BufferDecl* output() const;
    std::size_t input_count() const;
};

} // namespace gpc::kernelc
