#include "gpc/kernelc/interp.hpp"

#include <cmath>
#include <vector>

namespace gpc::kernelc {

namespace {

struct Fault {};
struct Diverged {};
struct Halt {};
struct Break {};
struct Continue {};

// Integer results are computed in 64 bits and truncated to 32.
std::int32_t wrap32(std::int64_t v)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v) & 0xffffffffu));
}

struct Value {
    std::int64_t i = 0; // int and bool
    double f = 0.0;
};

class Interpreter {
public:
    Interpreter(const EntryDecl& e, std::span<const HostArray> inputs, std::int32_t tid, std::uint64_t cap,
                bool bounds_check, bool out_float)
        : entry_(e), inputs_(inputs), tid_(tid), cap_(cap), bounds_(bounds_check), out_float_(out_float),
          locals_(e.local_types.size())
    {
    }

    InterpOutcome run()
    {
        InterpOutcome out;
        try {
            exec(*entry_.body);
        } catch (const Halt&) {
        } catch (const Fault&) {
            out.status = InterpStatus::fault;
            return out;
        } catch (const Diverged&) {
            out.status = InterpStatus::diverged;
            return out;
        }
        out.value = stored_;
        return out;
    }

private:
    void tick()
    {
        if (++iterations_ > cap_)
            throw Diverged{};
    }

    bool truthy(const Expr& e) { return eval(e).i != 0; }

    void store(const Expr& e)
    {
        Value v = eval(e);
        stored_ = out_float_ ? v.f : static_cast<double>(v.i);
    }

    void exec(const Stmt& s)
    {
        switch (s.kind) {
        case StmtKind::block:
            for (const auto& c : s.body)
                exec(*c);
            break;
        case StmtKind::decl:
            locals_[static_cast<std::size_t>(s.ref)] = s.value ? eval(*s.value) : Value{};
            break;
        case StmtKind::assign: locals_[static_cast<std::size_t>(s.ref)] = eval(*s.value); break;
        case StmtKind::store_out: store(*s.value); break;
        case StmtKind::ret:
            store(*s.value);
            throw Halt{};
        case StmtKind::if_:
            if (truthy(*s.cond))
                exec(*s.then_branch);
            else if (s.else_branch)
                exec(*s.else_branch);
            break;
        case StmtKind::while_:
            while (truthy(*s.cond)) {
                tick();
                try {
                    exec(*s.then_branch);
                } catch (const Break&) {
                    break;
                } catch (const Continue&) {
                }
            }
            break;
        case StmtKind::for_:
            if (s.init)
                exec(*s.init);
            while (!s.cond || truthy(*s.cond)) {
                tick();
                try {
                    exec(*s.then_branch);
                } catch (const Break&) {
                    break;
                } catch (const Continue&) {
                }
                if (s.step)
                    exec(*s.step);
            }
            break;
        case StmtKind::break_: throw Break{};
        case StmtKind::continue_: throw Continue{};
        }
    }

    Value eval(const Expr& e)
    {
        Value v;
        switch (e.kind) {
        case ExprKind::int_lit:
        case ExprKind::bool_lit: v.i = e.int_value; return v;
        case ExprKind::float_lit: v.f = e.float_value; return v;
        case ExprKind::var: return locals_[static_cast<std::size_t>(e.ref)];
        case ExprKind::tid: v.i = tid_; return v;
        case ExprKind::load: {
            std::int64_t idx = eval(*e.args[0]).i;
            const HostArray& a = inputs_[static_cast<std::size_t>(e.ref)];
            if (idx < 0 || static_cast<std::uint64_t>(idx) >= a.size()) {
                if (bounds_)
                    throw Fault{};
                return v;
            }
            if (e.type == Type::float_)
                v.f = a.floats[static_cast<std::size_t>(idx)];
            else
                v.i = a.ints[static_cast<std::size_t>(idx)];
            return v;
        }
        case ExprKind::call: {
            double x = eval(*e.args[0]).f;
            v.f = e.op == Op::sqrt ? std::sqrt(x) : std::fabs(x);
            return v;
        }
        case ExprKind::convert: return convert(e);
        case ExprKind::unary: {
            Value a = eval(*e.args[0]);
            switch (e.op) {
            case Op::neg:
                if (e.type == Type::float_)
                    v.f = -a.f;
                else
                    v.i = wrap32(-a.i);
                break;
            case Op::log_not: v.i = a.i == 0; break;
            case Op::bit_not: v.i = wrap32(~a.i); break;
            default: break;
            }
            return v;
        }
        case ExprKind::binary: return binary(e);
        }
        return v;
    }

    Value convert(const Expr& e)
    {
        Value a = eval(*e.args[0]);
        Type from = e.args[0]->type;
        Value v;
        switch (e.type) {
        case Type::float_: v.f = static_cast<double>(a.i); break;
        case Type::bool_: v.i = a.i != 0; break;
        case Type::int_:
            if (from == Type::float_) {
                double t = std::trunc(a.f);
                if (!(t >= -2147483648.0 && t <= 2147483647.0))
                    throw Fault{};
                v.i = static_cast<std::int64_t>(t);
            } else {
                v.i = a.i;
            }
            break;
        default: break;
        }
        return v;
    }

    Value binary(const Expr& e)
    {
        Value v;
        if (e.op == Op::log_and) {
            v.i = truthy(*e.args[0]) && truthy(*e.args[1]);
            return v;
        }
        if (e.op == Op::log_or) {
            v.i = truthy(*e.args[0]) || truthy(*e.args[1]);
            return v;
        }
        Value a = eval(*e.args[0]);
        Value b = eval(*e.args[1]);
        if (e.args[0]->type == Type::float_) {
            switch (e.op) {
            case Op::add: v.f = a.f + b.f; break;
            case Op::sub: v.f = a.f - b.f; break;
            case Op::mul: v.f = a.f * b.f; break;
            case Op::div: v.f = a.f / b.f; break;
            case Op::eq: v.i = a.f == b.f; break;
            case Op::ne: v.i = a.f != b.f; break;
            case Op::lt: v.i = a.f < b.f; break;
            case Op::le: v.i = a.f <= b.f; break;
            case Op::gt: v.i = a.f > b.f; break;
            case Op::ge: v.i = a.f >= b.f; break;
            default: break;
            }
            return v;
        }
        std::int64_t x = a.i;
        std::int64_t y = b.i;
        switch (e.op) {
        case Op::add: v.i = wrap32(x + y); break;
        case Op::sub: v.i = wrap32(x - y); break;
        case Op::mul: v.i = wrap32(x * y); break;
        case Op::div:
            if (y == 0)
                throw Fault{};
            v.i = wrap32(x / y);
            break;
        case Op::rem:
            if (y == 0)
                throw Fault{};
            v.i = wrap32(x % y);
            break;
        case Op::bit_and: v.i = wrap32(x & y); break;
        case Op::bit_or: v.i = wrap32(x | y); break;
        case Op::bit_xor: v.i = wrap32(x ^ y); break;
        case Op::shl: v.i = wrap32(static_cast<std::int64_t>(static_cast<std::uint64_t>(x) << (y & 31))); break;
        case Op::shr: v.i = wrap32(x >> (y & 31)); break;
        case Op::eq: v.i = x == y; break;
        case Op::ne: v.i = x != y; break;
        case Op::lt: v.i = x < y; break;
        case Op::le: v.i = x <= y; break;
        case Op::gt: v.i = x > y; break;
        case Op::ge: v.i = x >= y; break;
        default: break;
        }
        return v;
    }

    const EntryDecl& entry_;
    std::span<const HostArray> inputs_;
    std::int32_t tid_;
    std::uint64_t cap_;
    bool bounds_;
    bool out_float_;
    std::vector<Value> locals_;
    std::uint64_t iterations_ = 0;
    double stored_ = 0.0;
};

} // namespace

InterpOutcome interpret(const Program& prog, const EntryDecl& entry, std::span<const HostArray> inputs,
                        std::int32_t tid, std::uint64_t iteration_cap, bool bounds_check)
{
    const BufferDecl* out = prog.output();
    bool out_float = out && out->elem == Type::float_;
    return Interpreter(entry, inputs, tid, iteration_cap, bounds_check, out_float).run();
}

} // namespace gpc::kernelc
