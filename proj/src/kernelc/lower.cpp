#include <bit>

#include "gpc/kernelc/compiler.hpp"
#include "gpc/kernelc/semantics.hpp"

namespace gpc::kernelc {

namespace {

// Result of lowering an expression: either a register or, with folding
// enabled, a compile-time constant not yet materialized.
struct Operand {
    bool is_const = false;
    bool is_float = false;
    std::int32_t i = 0;
    double f = 0.0;
    std::int32_t reg = -1;

    static Operand int_const(std::int32_t v) { return {true, false, v, 0.0, -1}; }
    static Operand float_const(double v) { return {true, true, 0, v, -1}; }
    static Operand in_reg(std::int32_t r, bool is_float) { return {false, is_float, 0, 0.0, r}; }
};

Opcode int_or_float(Type t, Opcode i, Opcode f)
{
    return t == Type::float_ ? f : i;
}

class EntryLowerer {
public:
    EntryLowerer(const EntryDecl& e, const CompileOptions& opts) : entry_(e), opts_(opts)
    {
        next_vreg_ = static_cast<std::int32_t>(e.local_types.size());
    }

    IrEntry run()
    {
        statement(*entry_.body);
        emit({Opcode::halt});
        IrEntry out;
        out.name = entry_.name;
        out.vreg_count = static_cast<std::uint32_t>(next_vreg_);
        out.code = std::move(code_);
        return out;
    }

private:
    struct Loop {
        std::int64_t continue_label;
        std::int64_t break_label;
    };

    void emit(IrInstr in) { code_.push_back(in); }
    std::int32_t temp() { return next_vreg_++; }
    std::int64_t new_label() { return next_label_++; }
    void place(std::int64_t label) { emit({Opcode::label, -1, -1, -1, label}); }
    void jump(std::int64_t label) { emit({Opcode::jmp, -1, -1, -1, label}); }

    void load_const(std::int32_t dst, const Operand& c)
    {
        if (c.is_float)
            emit({Opcode::const_f, dst, -1, -1, static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(c.f))});
        else
            emit({Opcode::const_i, dst, -1, -1, c.i});
    }

    std::int32_t reg(const Operand& o)
    {
        if (!o.is_const)
            return o.reg;
        std::int32_t r = temp();
        load_const(r, o);
        return r;
    }

    Operand literal(Operand c)
    {
        if (opts_.constant_folding)
            return c;
        std::int32_t r = temp();
        load_const(r, c);
        return Operand::in_reg(r, c.is_float);
    }

    Operand unary_reg(Opcode op, const Operand& a, bool result_float)
    {
        std::int32_t r = temp();
        emit({op, r, reg(a)});
        return Operand::in_reg(r, result_float);
    }

    Operand binary_reg(Opcode op, const Operand& a, const Operand& b, bool result_float)
    {
        std::int32_t ra = reg(a);
        std::int32_t rb = reg(b);
        std::int32_t r = temp();
        emit({op, r, ra, rb});
        return Operand::in_reg(r, result_float);
    }

    // ---- expressions ----------------------------------------------------

    Operand expr(const Expr& e)
    {
        switch (e.kind) {
        case ExprKind::int_lit:
        case ExprKind::bool_lit: return literal(Operand::int_const(e.int_value));
        case ExprKind::float_lit: return literal(Operand::float_const(e.float_value));
        case ExprKind::var: return Operand::in_reg(e.ref, e.type == Type::float_);
        case ExprKind::tid: {
            std::int32_t r = temp();
            emit({Opcode::tid, r});
            return Operand::in_reg(r, false);
        }
        case ExprKind::load: {
            Operand idx = expr(*e.args[0]);
            std::int32_t ri = reg(idx);
            std::int32_t r = temp();
            Opcode op = opts_.bounds_check ? int_or_float(e.type, Opcode::ld_i, Opcode::ld_f)
                                           : int_or_float(e.type, Opcode::ldu_i, Opcode::ldu_f);
            emit({op, r, ri, -1, e.ref});
            return Operand::in_reg(r, e.type == Type::float_);
        }
        case ExprKind::unary: return unary(e);
        case ExprKind::binary:
            if (e.op == Op::log_and || e.op == Op::log_or)
                return logical(e);
            return binary(e);
        case ExprKind::call: {
            Operand a = expr(*e.args[0]);
            if (a.is_const)
                return Operand::float_const(e.op == Op::sqrt ? std::sqrt(a.f) : std::fabs(a.f));
            return unary_reg(e.op == Op::sqrt ? Opcode::sqrt_f : Opcode::fabs_f, a, true);
        }
        case ExprKind::convert: return convert(e);
        }
        throw CompileError(CompileError::Kind::internal, entry_.name, e.loc, "unhandled expression");
    }

    Operand unary(const Expr& e)
    {
        Operand a = expr(*e.args[0]);
        bool is_float = e.type == Type::float_;
        if (a.is_const) {
            switch (e.op) {
            case Op::neg: return is_float ? Operand::float_const(-a.f) : Operand::int_const(sem::neg(a.i));
            case Op::log_not: return Operand::int_const(a.i == 0 ? 1 : 0);
            case Op::bit_not: return Operand::int_const(~a.i);
            default: break;
            }
        }
        switch (e.op) {
        case Op::neg: return unary_reg(is_float ? Opcode::neg_f : Opcode::neg_i, a, is_float);
        case Op::log_not: return unary_reg(Opcode::lnot, a, false);
        case Op::bit_not: return unary_reg(Opcode::not_i, a, false);
        default: break;
        }
        throw CompileError(CompileError::Kind::internal, entry_.name, e.loc, "bad unary operator");
    }

    static std::optional<Operand> fold_int(Op op, std::int32_t a, std::int32_t b)
    {
        auto flag = [](bool v) { return Operand::int_const(v ? 1 : 0); };
        switch (op) {
        case Op::add: return Operand::int_const(sem::add(a, b));
        case Op::sub: return Operand::int_const(sem::sub(a, b));
        case Op::mul: return Operand::int_const(sem::mul(a, b));
        case Op::div: {
            auto v = sem::div(a, b);
            return v ? std::optional(Operand::int_const(*v)) : std::nullopt;
        }
        case Op::rem: {
            auto v = sem::rem(a, b);
            return v ? std::optional(Operand::int_const(*v)) : std::nullopt;
        }
        case Op::bit_and: return Operand::int_const(a & b);
        case Op::bit_or: return Operand::int_const(a | b);
        case Op::bit_xor: return Operand::int_const(a ^ b);
        case Op::shl: return Operand::int_const(sem::shl(a, b));
        case Op::shr: return Operand::int_const(sem::shr(a, b));
        case Op::eq: return flag(a == b);
        case Op::ne: return flag(a != b);
        case Op::lt: return flag(a < b);
        case Op::le: return flag(a <= b);
        case Op::gt: return flag(a > b);
        case Op::ge: return flag(a >= b);
        default: return std::nullopt;
        }
    }

    static std::optional<Operand> fold_float(Op op, double a, double b)
    {
        auto flag = [](bool v) { return Operand::int_const(v ? 1 : 0); };
        switch (op) {
        case Op::add: return Operand::float_const(a + b);
        case Op::sub: return Operand::float_const(a - b);
        case Op::mul: return Operand::float_const(a * b);
        case Op::div: return Operand::float_const(a / b);
        case Op::eq: return flag(a == b);
        case Op::ne: return flag(a != b);
        case Op::lt: return flag(a < b);
        case Op::le: return flag(a <= b);
        case Op::gt: return flag(a > b);
        case Op::ge: return flag(a >= b);
        default: return std::nullopt;
        }
    }

    Operand binary(const Expr& e)
    {
        Operand a = expr(*e.args[0]);
        Operand b = expr(*e.args[1]);
        bool float_operands = e.args[0]->type == Type::float_;
        if (a.is_const && b.is_const) {
            auto folded = float_operands ? fold_float(e.op, a.f, b.f) : fold_int(e.op, a.i, b.i);
            if (folded)
                return *folded;
        }
        Opcode op{};
        bool f = float_operands;
        switch (e.op) {
        case Op::add: op = f ? Opcode::add_f : Opcode::add_i; break;
        case Op::sub: op = f ? Opcode::sub_f : Opcode::sub_i; break;
        case Op::mul: op = f ? Opcode::mul_f : Opcode::mul_i; break;
        case Op::div: op = f ? Opcode::div_f : Opcode::div_i; break;
        case Op::rem: op = Opcode::rem_i; break;
        case Op::bit_and: op = Opcode::and_i; break;
        case Op::bit_or: op = Opcode::or_i; break;
        case Op::bit_xor: op = Opcode::xor_i; break;
        case Op::shl: op = Opcode::shl_i; break;
        case Op::shr: op = Opcode::shr_i; break;
        case Op::eq: op = f ? Opcode::eq_f : Opcode::eq_i; break;
        case Op::ne: op = f ? Opcode::ne_f : Opcode::ne_i; break;
        case Op::lt: op = f ? Opcode::lt_f : Opcode::lt_i; break;
        case Op::le: op = f ? Opcode::le_f : Opcode::le_i; break;
        case Op::gt: op = f ? Opcode::gt_f : Opcode::gt_i; break;
        case Op::ge: op = f ? Opcode::ge_f : Opcode::ge_i; break;
        default: throw CompileError(CompileError::Kind::internal, entry_.name, e.loc, "bad binary operator");
        }
        return binary_reg(op, a, b, e.type == Type::float_);
    }

    // Short-circuit && and ||; the right operand is only evaluated when the
    // left one does not decide the result.
    Operand logical(const Expr& e)
    {
        bool is_and = e.op == Op::log_and;
        Operand a = expr(*e.args[0]);
        if (a.is_const) {
            bool decided = is_and ? a.i == 0 : a.i != 0;
            if (decided)
                return Operand::int_const(is_and ? 0 : 1);
            Operand b = expr(*e.args[1]);
            if (b.is_const)
                return Operand::int_const(b.i != 0 ? 1 : 0);
            return unary_reg(Opcode::to_bool, b, false);
        }
        std::int32_t t = temp();
        emit({Opcode::to_bool, t, a.reg});
        std::int64_t done = new_label();
        emit({is_and ? Opcode::brz : Opcode::brnz, -1, t, -1, done});
        Operand b = expr(*e.args[1]);
        emit({Opcode::to_bool, t, reg(b)});
        place(done);
        return Operand::in_reg(t, false);
    }

    Operand convert(const Expr& e)
    {
        const Expr& src = *e.args[0];
        Type from = src.type;
        Type to = e.type;
        Operand a = expr(src);
        if (from == Type::bool_ && to == Type::int_)
            return a;
        if (to == Type::float_) {
            if (a.is_const)
                return Operand::float_const(static_cast<double>(a.i));
            return unary_reg(Opcode::cvt_f_i, a, true);
        }
        if (to == Type::int_ && from == Type::float_) {
            if (a.is_const) {
                if (auto v = sem::float_to_int(a.f))
                    return Operand::int_const(*v);
            }
            return unary_reg(Opcode::cvt_i_f, a, false);
        }
        if (to == Type::bool_ && from == Type::int_) {
            if (a.is_const)
                return Operand::int_const(a.i != 0 ? 1 : 0);
            return unary_reg(Opcode::to_bool, a, false);
        }
        throw CompileError(CompileError::Kind::internal, entry_.name, e.loc,
                           "unsupported conversion " + std::string(type_name(from)) + " -> " + std::string(type_name(to)));
    }

    // ---- statements -----------------------------------------------------

    void assign_local(std::int32_t local, const Operand& v)
    {
        if (v.is_const)
            load_const(local, v);
        else if (v.reg != local)
            emit({Opcode::mov, local, v.reg});
    }

    // Emits a branch to `target` taken when `cond` is false. A folded
    // constant condition sets exactly one of the flags instead.
    void branch_if_false(const Expr& cond, std::int64_t target, bool& always_false, bool& always_true)
    {
        Operand c = expr(cond);
        always_false = always_true = false;
        if (c.is_const) {
            (c.i != 0 ? always_true : always_false) = true;
            if (always_false)
                jump(target);
            return;
        }
        emit({Opcode::brz, -1, c.reg, -1, target});
    }

    void statement(const Stmt& s)
    {
        switch (s.kind) {
        case StmtKind::block:
            for (const auto& child : s.body)
                statement(*child);
            return;
        case StmtKind::decl: {
            if (s.value) {
                assign_local(s.ref, expr(*s.value));
            } else {
                Operand zero = s.decl_type == Type::float_ ? Operand::float_const(0.0) : Operand::int_const(0);
                load_const(s.ref, zero);
            }
            return;
        }
        case StmtKind::assign: assign_local(s.ref, expr(*s.value)); return;
        case StmtKind::store_out:
        case StmtKind::ret: {
            Operand v = expr(*s.value);
            emit({v.is_float ? Opcode::st_f : Opcode::st_i, -1, reg(v)});
            if (s.kind == StmtKind::ret)
                emit({Opcode::halt});
            return;
        }
        case StmtKind::if_: {
            std::int64_t else_label = new_label();
            std::int64_t end_label = new_label();
            bool never = false;
            bool always = false;
            branch_if_false(*s.cond, else_label, never, always);
            if (!never)
                statement(*s.then_branch);
            if (s.else_branch && !always) {
                jump(end_label);
                place(else_label);
                statement(*s.else_branch);
                place(end_label);
            } else {
                place(else_label);
            }
            return;
        }
        case StmtKind::while_: {
            std::int64_t top = new_label();
            std::int64_t end = new_label();
            place(top);
            bool never = false;
            bool always = false;
            branch_if_false(*s.cond, end, never, always);
            loops_.push_back({top, end});
            if (!never)
                statement(*s.then_branch);
            loops_.pop_back();
            jump(top);
            place(end);
            return;
        }
        case StmtKind::for_: {
            if (s.init)
                statement(*s.init);
            std::int64_t top = new_label();
            std::int64_t cont = new_label();
            std::int64_t end = new_label();
            place(top);
            bool never = false;
            bool always = false;
            if (s.cond)
                branch_if_false(*s.cond, end, never, always);
            loops_.push_back({cont, end});
            if (!never)
                statement(*s.then_branch);
            loops_.pop_back();
            place(cont);
            if (s.step)
                statement(*s.step);
            jump(top);
            place(end);
            return;
        }
        case StmtKind::break_: jump(loops_.back().break_label); return;
        case StmtKind::continue_: jump(loops_.back().continue_label); return;
        }
    }

    const EntryDecl& entry_;
    const CompileOptions& opts_;
    std::vector<IrInstr> code_;
    std::vector<Loop> loops_;
    std::int32_t next_vreg_ = 0;
    std::int64_t next_label_ = 0;
};

} // namespace

IrModule lower_program(const Program& prog, const CompileOptions& opts)
{
    IrModule m;
    m.options_fingerprint = opts.fingerprint();
    for (const auto& b : prog.buffers)
        m.buffers.push_back({b.name, b.elem == Type::float_, b.is_output});
    m.entries.reserve(prog.entries.size());
    for (const auto& e : prog.entries)
        m.entries.push_back(EntryLowerer(e, opts).run());
    return m;
}

} // namespace gpc::kernelc
