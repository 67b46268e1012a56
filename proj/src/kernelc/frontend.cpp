#include "gpc/kernelc/frontend.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

namespace gpc::kernelc {

std::string_view type_name(Type t)
{
    switch (t) {
    case Type::void_: return "void";
    case Type::int_: return "int";
    case Type::float_: return "float";
    case Type::bool_: return "bool";
    }
    return "?";
}

std::string_view op_spelling(Op op)
{
    switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::rem: return "%";
    case Op::bit_and: return "&";
    case Op::bit_or: return "|";
    case Op::bit_xor: return "^";
    case Op::shl: return "<<";
    case Op::shr: return ">>";
    case Op::eq: return "==";
    case Op::ne: return "!=";
    case Op::lt: return "<";
    case Op::le: return "<=";
    case Op::gt: return ">";
    case Op::ge: return ">=";
    case Op::log_and: return "&&";
    case Op::log_or: return "||";
    case Op::neg: return "-";
    case Op::log_not: return "!";
    case Op::bit_not: return "~";
    case Op::sqrt: return "sqrt";
    case Op::fabs: return "fabs";
    }
    return "?";
}

const BufferDecl* Program::output() const
{
    for (const auto& b : buffers)
        if (b.is_output)
            return &b;
    return nullptr;
}

std::size_t Program::input_count() const
{
    std::size_t n = 0;
    for (const auto& b : buffers)
        n += b.is_output ? 0 : 1;
    return n;
}

namespace {

std::string format_error(const std::string& entry, SourceLoc loc, const std::string& message)
{
    return "entry '" + entry + "' line " + std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": "
           + message;
}

} // namespace

CompileError::CompileError(Kind kind, std::string entry, SourceLoc loc, const std::string& message)
    : std::runtime_error(format_error(entry, loc, message)), kind_(kind), entry_(std::move(entry)), loc_(loc)
{
}

namespace {

enum class Tok : std::uint8_t {
    end, ident, int_lit, float_lit,
    kw_int, kw_float, kw_bool, kw_true, kw_false, kw_if, kw_else, kw_for, kw_while,
    kw_return, kw_break, kw_continue, kw_in, kw_out, kw_entry,
    lparen, rparen, lbrace, rbrace, lbracket, rbracket, semi, comma,
    assign, plus_assign, minus_assign, star_assign, plus_plus, minus_minus,
    plus, minus, star, slash, percent, amp, pipe, caret, tilde, bang,
    shl, shr, lt, le, gt, ge, eq, ne, and_and, or_or,
};

struct Token {
    Tok kind = Tok::end;
    std::string_view text;
    SourceLoc loc;
};

const std::map<std::string_view, Tok, std::less<>> keywords = {
    {"int", Tok::kw_int},         {"float", Tok::kw_float},   {"bool", Tok::kw_bool},
    {"true", Tok::kw_true},       {"false", Tok::kw_false},   {"if", Tok::kw_if},
    {"else", Tok::kw_else},       {"for", Tok::kw_for},       {"while", Tok::kw_while},
    {"return", Tok::kw_return},   {"break", Tok::kw_break},   {"continue", Tok::kw_continue},
    {"__in", Tok::kw_in},         {"__out", Tok::kw_out},     {"__entry", Tok::kw_entry},
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_trivia();
            Token t;
            t.loc = {line_, col_};
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            std::size_t start = pos_;
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance();
                t.text = src_.substr(start, pos_ - start);
                auto kw = keywords.find(t.text);
                t.kind = kw == keywords.end() ? Tok::ident : kw->second;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                bool is_float = false;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    advance();
                if (pos_ < src_.size() && src_[pos_] == '.') {
                    is_float = true;
                    advance();
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        advance();
                }
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                    std::size_t save = pos_;
                    advance();
                    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                        advance();
                    if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                        is_float = true;
                        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                            advance();
                    } else {
                        pos_ = save;
                    }
                }
                t.kind = is_float ? Tok::float_lit : Tok::int_lit;
                t.text = src_.substr(start, pos_ - start);
            } else {
                t.kind = punct();
                t.text = src_.substr(start, pos_ - start);
            }
            out.push_back(t);
        }
    }

private:
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_trivia()
    {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                SourceLoc at{line_, col_};
                advance();
                advance();
                while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/'))
                    advance();
                if (pos_ + 1 >= src_.size())
                    throw CompileError(CompileError::Kind::syntax, "<unit>", at, "unterminated comment");
                advance();
                advance();
            } else {
                break;
            }
        }
    }

    bool next_is(char c) const { return pos_ + 1 < src_.size() && src_[pos_ + 1] == c; }

    Tok two(char second, Tok if_two, Tok if_one)
    {
        if (next_is(second)) {
            advance();
            advance();
            return if_two;
        }
        advance();
        return if_one;
    }

    Tok punct()
    {
        SourceLoc at{line_, col_};
        char c = src_[pos_];
        switch (c) {
        case '(': advance(); return Tok::lparen;
        case ')': advance(); return Tok::rparen;
        case '{': advance(); return Tok::lbrace;
        case '}': advance(); return Tok::rbrace;
        case '[': advance(); return Tok::lbracket;
        case ']': advance(); return Tok::rbracket;
        case ';': advance(); return Tok::semi;
        case ',': advance(); return Tok::comma;
        case '~': advance(); return Tok::tilde;
        case '^': advance(); return Tok::caret;
        case '%': advance(); return Tok::percent;
        case '/': advance(); return Tok::slash;
        case '*': return two('=', Tok::star_assign, Tok::star);
        case '=': return two('=', Tok::eq, Tok::assign);
        case '!': return two('=', Tok::ne, Tok::bang);
        case '&': return two('&', Tok::and_and, Tok::amp);
        case '|': return two('|', Tok::or_or, Tok::pipe);
        case '+':
            if (next_is('+'))
                return two('+', Tok::plus_plus, Tok::plus);
            return two('=', Tok::plus_assign, Tok::plus);
        case '-':
            if (next_is('-'))
                return two('-', Tok::minus_minus, Tok::minus);
            return two('=', Tok::minus_assign, Tok::minus);
        case '<':
            if (next_is('<'))
                return two('<', Tok::shl, Tok::lt);
            return two('=', Tok::le, Tok::lt);
        case '>':
            if (next_is('>'))
                return two('>', Tok::shr, Tok::gt);
            return two('=', Tok::ge, Tok::gt);
        default:
            throw CompileError(CompileError::Kind::syntax, "<unit>", at,
                               std::string("unexpected character '") + c + "'");
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool is_numeric(Type t)
{
    return t == Type::int_ || t == Type::float_ || t == Type::bool_;
}

bool is_integral(Type t)
{
    return t == Type::int_ || t == Type::bool_;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program run()
    {
        Program prog;
        prog_ = &prog;
        while (peek().kind != Tok::end) {
            if (peek().kind == Tok::kw_in || peek().kind == Tok::kw_out)
                buffer_decl(prog);
            else if (peek().kind == Tok::kw_entry)
                entry_decl(prog);
            else
                fail(CompileError::Kind::syntax, peek().loc, "expected `__in`, `__out` or `__entry`");
        }
        return prog;
    }

private:
    // ---- token helpers -------------------------------------------------

    const Token& peek(std::size_t ahead = 0) const
    {
        std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }

    const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    bool accept(Tok k)
    {
        if (peek().kind != k)
            return false;
        ++pos_;
        return true;
    }

    const Token& expect(Tok k, const char* what)
    {
        if (peek().kind != k)
            fail(CompileError::Kind::syntax, peek().loc,
                 std::string("expected ") + what + " near '" + std::string(peek().text) + "'");
        return take();
    }

    [[noreturn]] void fail(CompileError::Kind kind, SourceLoc loc, const std::string& msg) const
    {
        throw CompileError(kind, entry_.empty() ? "<unit>" : entry_, loc, msg);
    }

    static bool is_type_kw(Tok k) { return k == Tok::kw_int || k == Tok::kw_float || k == Tok::kw_bool; }

    Type type_kw(const Token& t) const
    {
        switch (t.kind) {
        case Tok::kw_int: return Type::int_;
        case Tok::kw_float: return Type::float_;
        case Tok::kw_bool: return Type::bool_;
        default: fail(CompileError::Kind::syntax, t.loc, "expected a type");
        }
    }

    // ---- top level -----------------------------------------------------

    void buffer_decl(Program& prog)
    {
        const Token& q = take();
        bool is_out = q.kind == Tok::kw_out;
        Type elem = type_kw(take());
        if (elem == Type::bool_)
            fail(CompileError::Kind::type, q.loc, "buffers must be int or float");
        const Token& name = expect(Tok::ident, "buffer name");
        expect(Tok::lbracket, "'['");
        expect(Tok::rbracket, "']'");
        expect(Tok::semi, "';'");
        for (const auto& b : prog.buffers)
            if (b.name == name.text)
                fail(CompileError::Kind::type, name.loc, "duplicate buffer '" + std::string(name.text) + "'");
        if (is_out && prog.output())
            fail(CompileError::Kind::type, name.loc, "only one __out buffer is allowed");
        BufferDecl d;
        d.name = std::string(name.text);
        d.elem = elem;
        d.is_output = is_out;
        d.slot = is_out ? -1 : static_cast<int>(prog.input_count());
        d.loc = q.loc;
        prog.buffers.push_back(std::move(d));
    }

    void entry_decl(Program& prog)
    {
        SourceLoc at = take().loc;
        const Token& name = expect(Tok::ident, "entry name");
        entry_ = std::string(name.text);
        for (const auto& e : prog.entries)
            if (e.name == entry_)
                fail(CompileError::Kind::type, name.loc, "duplicate entry '" + entry_ + "'");
        expect(Tok::lparen, "'('");
        expect(Tok::rparen, "')'");
        locals_.clear();
        scopes_.clear();
        loop_depth_ = 0;

        EntryDecl e;
        e.name = entry_;
        e.loc = at;
        e.body = block();
        e.local_types = std::move(locals_);
        prog.entries.push_back(std::move(e));
        entry_.clear();
    }

    // ---- statements ----------------------------------------------------

    StmtPtr make_stmt(StmtKind kind, SourceLoc loc)
    {
        auto s = std::make_unique<Stmt>();
        s->kind = kind;
        s->loc = loc;
        return s;
    }

    StmtPtr block()
    {
        SourceLoc at = expect(Tok::lbrace, "'{'").loc;
        auto s = make_stmt(StmtKind::block, at);
        scopes_.emplace_back();
        while (!accept(Tok::rbrace)) {
            if (peek().kind == Tok::end)
                fail(CompileError::Kind::syntax, peek().loc, "expected '}'");
            s->body.push_back(statement());
        }
        scopes_.pop_back();
        return s;
    }

    // Statements that may appear in a nested position get their own scope so
    // `if (c) int x = 1;` does not leak `x`.
    StmtPtr scoped_statement()
    {
        scopes_.emplace_back();
        auto s = statement();
        scopes_.pop_back();
        return s;
    }

    StmtPtr statement()
    {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::lbrace: return block();
        case Tok::kw_if: return if_stmt();
        case Tok::kw_while: return while_stmt();
        case Tok::kw_for: return for_stmt();
        case Tok::kw_return: {
            take();
            auto s = make_stmt(StmtKind::ret, t.loc);
            s->value = coerce_to_output(expression(), t.loc);
            expect(Tok::semi, "';'");
            return s;
        }
        case Tok::kw_break:
        case Tok::kw_continue: {
            take();
            if (loop_depth_ == 0)
                fail(CompileError::Kind::syntax, t.loc, std::string(t.text) + " outside of a loop");
            expect(Tok::semi, "';'");
            return make_stmt(t.kind == Tok::kw_break ? StmtKind::break_ : StmtKind::continue_, t.loc);
        }
        case Tok::semi: take(); return make_stmt(StmtKind::block, t.loc);
        default: break;
        }
        auto s = simple_statement();
        expect(Tok::semi, "';'");
        return s;
    }

    // Declarations and assignments; used for plain statements and for-loop
    // init/step clauses.
    StmtPtr simple_statement()
    {
        const Token& t = peek();
        if (is_type_kw(t.kind))
            return declaration();
        if (t.kind != Tok::ident)
            fail(CompileError::Kind::syntax, t.loc, "expected a statement near '" + std::string(t.text) + "'");

        if (const BufferDecl* buf = find_buffer(t.text)) {
            if (!buf->is_output)
                fail(CompileError::Kind::type, t.loc, "input buffer '" + buf->name + "' is read-only");
            take();
            expect(Tok::lbracket, "'['");
            const Token& idx = peek();
            if (idx.kind != Tok::ident || idx.text != "tid" || peek(1).kind != Tok::rbracket)
                fail(CompileError::Kind::type, idx.loc, "output buffer may only be indexed by tid");
            take();
            take();
            expect(Tok::assign, "'='");
            auto s = make_stmt(StmtKind::store_out, t.loc);
            s->value = coerce_to_output(expression(), t.loc);
            return s;
        }

        take();
        int id = lookup_local(t);
        Type vt = locals_[static_cast<std::size_t>(id)];
        auto var = [&] {
            auto e = make_expr(ExprKind::var, t.loc);
            e->name = std::string(t.text);
            e->ref = id;
            e->type = vt;
            return e;
        };
        auto s = make_stmt(StmtKind::assign, t.loc);
        s->name = std::string(t.text);
        s->ref = id;

        const Token& op = take();
        switch (op.kind) {
        case Tok::assign:
            s->value = coerce_assign(expression(), vt, op.loc);
            break;
        case Tok::plus_assign:
        case Tok::minus_assign:
        case Tok::star_assign: {
            Op bop = op.kind == Tok::plus_assign ? Op::add : op.kind == Tok::minus_assign ? Op::sub : Op::mul;
            s->value = coerce_assign(binary(bop, var(), expression(), op.loc), vt, op.loc);
            break;
        }
        case Tok::plus_plus:
        case Tok::minus_minus: {
            auto one = make_expr(ExprKind::int_lit, op.loc);
            one->int_value = 1;
            one->type = Type::int_;
            Op bop = op.kind == Tok::plus_plus ? Op::add : Op::sub;
            s->value = coerce_assign(binary(bop, var(), std::move(one), op.loc), vt, op.loc);
            break;
        }
        default:
            fail(CompileError::Kind::syntax, op.loc, "expected assignment operator near '" + std::string(op.text) + "'");
        }
        return s;
    }

    StmtPtr declaration()
    {
        const Token& ty = take();
        Type t = type_kw(ty);
        const Token& name = expect(Tok::ident, "variable name");
        if (name.text == "tid" || find_buffer(name.text))
            fail(CompileError::Kind::type, name.loc, "'" + std::string(name.text) + "' is reserved");
        auto s = make_stmt(StmtKind::decl, ty.loc);
        s->decl_type = t;
        s->name = std::string(name.text);
        if (accept(Tok::assign))
            s->value = coerce_assign(expression(), t, name.loc);
        // declared after the initializer so `int x = x;` is an error
        auto& scope = scopes_.back();
        if (scope.contains(s->name))
            fail(CompileError::Kind::type, name.loc, "redeclaration of '" + s->name + "'");
        s->ref = static_cast<int>(locals_.size());
        locals_.push_back(t);
        scope.emplace(s->name, s->ref);
        return s;
    }

    StmtPtr if_stmt()
    {
        auto s = make_stmt(StmtKind::if_, take().loc);
        expect(Tok::lparen, "'('");
        s->cond = condition(expression());
        expect(Tok::rparen, "')'");
        s->then_branch = scoped_statement();
        if (accept(Tok::kw_else))
            s->else_branch = scoped_statement();
        return s;
    }

    StmtPtr while_stmt()
    {
        auto s = make_stmt(StmtKind::while_, take().loc);
        expect(Tok::lparen, "'('");
        s->cond = condition(expression());
        expect(Tok::rparen, "')'");
        ++loop_depth_;
        s->then_branch = scoped_statement();
        --loop_depth_;
        return s;
    }

    StmtPtr for_stmt()
    {
        auto s = make_stmt(StmtKind::for_, take().loc);
        scopes_.emplace_back();
        expect(Tok::lparen, "'('");
        if (!accept(Tok::semi)) {
            s->init = simple_statement();
            expect(Tok::semi, "';'");
        }
        if (peek().kind != Tok::semi)
            s->cond = condition(expression());
        expect(Tok::semi, "';'");
        if (peek().kind != Tok::rparen)
            s->step = simple_statement();
        expect(Tok::rparen, "')'");
        ++loop_depth_;
        s->then_branch = scoped_statement();
        --loop_depth_;
        scopes_.pop_back();
        return s;
    }

    // ---- expressions ---------------------------------------------------

    ExprPtr make_expr(ExprKind kind, SourceLoc loc)
    {
        auto e = std::make_unique<Expr>();
        e->kind = kind;
        e->loc = loc;
        return e;
    }

    static ExprPtr convert(ExprPtr e, Type to)
    {
        if (e->type == to)
            return e;
        auto c = std::make_unique<Expr>();
        c->kind = ExprKind::convert;
        c->loc = e->loc;
        c->type = to;
        c->args.push_back(std::move(e));
        return c;
    }

    ExprPtr condition(ExprPtr e)
    {
        if (!is_integral(e->type))
            fail(CompileError::Kind::type, e->loc,
                 "condition must be bool or int, got " + std::string(type_name(e->type)));
        return e;
    }

    ExprPtr coerce_assign(ExprPtr e, Type target, SourceLoc loc)
    {
        Type from = e->type;
        if (from == target)
            return e;
        bool ok = (target == Type::float_ && is_numeric(from)) || (target == Type::int_ && from == Type::bool_);
        if (!ok)
            fail(CompileError::Kind::type, loc,
                 "cannot assign " + std::string(type_name(from)) + " to " + std::string(type_name(target)));
        return convert(std::move(e), target);
    }

    ExprPtr coerce_to_output(ExprPtr e, SourceLoc loc)
    {
        const BufferDecl* out = prog_->output();
        if (!out)
            fail(CompileError::Kind::undefined, loc, "no __out buffer declared");
        return coerce_assign(std::move(e), out->elem, loc);
    }

    const BufferDecl* find_buffer(std::string_view name) const
    {
        for (const auto& b : prog_->buffers)
            if (b.name == name)
                return &b;
        return nullptr;
    }

    int lookup_local(const Token& t) const
    {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto f = it->find(t.text);
            if (f != it->end())
                return f->second;
        }
        fail(CompileError::Kind::undefined, t.loc, "undefined identifier '" + std::string(t.text) + "'");
    }

    ExprPtr binary(Op op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc)
    {
        Type a = lhs->type;
        Type b = rhs->type;
        auto bad = [&] {
            fail(CompileError::Kind::type, loc,
                 "invalid operands to '" + std::string(op_spelling(op)) + "': " + std::string(type_name(a)) + " and "
                     + std::string(type_name(b)));
        };
        if (!is_numeric(a) || !is_numeric(b))
            bad();

        auto e = make_expr(ExprKind::binary, loc);
        e->op = op;
        Type operand = Type::int_;
        switch (op) {
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
            operand = (a == Type::float_ || b == Type::float_) ? Type::float_ : Type::int_;
            e->type = operand;
            break;
        case Op::rem:
        case Op::bit_and:
        case Op::bit_or:
        case Op::bit_xor:
        case Op::shl:
        case Op::shr:
            if (!is_integral(a) || !is_integral(b))
                bad();
            e->type = Type::int_;
            break;
        case Op::eq:
        case Op::ne:
        case Op::lt:
        case Op::le:
        case Op::gt:
        case Op::ge:
            operand = (a == Type::float_ || b == Type::float_) ? Type::float_ : Type::int_;
            e->type = Type::bool_;
            break;
        case Op::log_and:
        case Op::log_or:
            if (!is_integral(a) || !is_integral(b))
                bad();
            operand = Type::void_; // operands keep their own type
            e->type = Type::bool_;
            break;
        default:
            bad();
        }
        if (operand != Type::void_) {
            lhs = convert(std::move(lhs), operand);
            rhs = convert(std::move(rhs), operand);
        }
        e->args.push_back(std::move(lhs));
        e->args.push_back(std::move(rhs));
        return e;
    }

    ExprPtr expression() { return binary_level(0); }

    struct Level {
        Tok tok;
        Op op;
    };

    // Precedence table, loosest first.
    static const std::vector<std::vector<Level>>& levels()
    {
        static const std::vector<std::vector<Level>> table = {
            {{Tok::or_or, Op::log_or}},
            {{Tok::and_and, Op::log_and}},
            {{Tok::pipe, Op::bit_or}},
            {{Tok::caret, Op::bit_xor}},
            {{Tok::amp, Op::bit_and}},
            {{Tok::eq, Op::eq}, {Tok::ne, Op::ne}},
            {{Tok::lt, Op::lt}, {Tok::le, Op::le}, {Tok::gt, Op::gt}, {Tok::ge, Op::ge}},
            {{Tok::shl, Op::shl}, {Tok::shr, Op::shr}},
            {{Tok::plus, Op::add}, {Tok::minus, Op::sub}},
            {{Tok::star, Op::mul}, {Tok::slash, Op::div}, {Tok::percent, Op::rem}},
        };
        return table;
    }

    ExprPtr binary_level(std::size_t level)
    {
        if (level == levels().size())
            return unary();
        auto lhs = binary_level(level + 1);
        while (true) {
            const Token& t = peek();
            const Level* match = nullptr;
            for (const auto& l : levels()[level])
                if (l.tok == t.kind)
                    match = &l;
            if (!match)
                return lhs;
            take();
            auto rhs = binary_level(level + 1);
            lhs = binary(match->op, std::move(lhs), std::move(rhs), t.loc);
        }
    }

    ExprPtr unary()
    {
        const Token& t = peek();
        if (t.kind == Tok::minus || t.kind == Tok::bang || t.kind == Tok::tilde) {
            take();
            auto operand = unary();
            auto e = make_expr(ExprKind::unary, t.loc);
            Type ot = operand->type;
            if (t.kind == Tok::minus) {
                // fold a negated literal so INT_MIN is expressible
                if (operand->kind == ExprKind::int_lit) {
                    operand->int_value = static_cast<std::int32_t>(0u - static_cast<std::uint32_t>(operand->int_value));
                    operand->loc = t.loc;
                    return operand;
                }
                if (operand->kind == ExprKind::float_lit) {
                    operand->float_value = -operand->float_value;
                    operand->loc = t.loc;
                    return operand;
                }
                e->op = Op::neg;
                e->type = ot == Type::float_ ? Type::float_ : Type::int_;
                operand = convert(std::move(operand), e->type);
            } else if (t.kind == Tok::bang) {
                if (!is_integral(ot))
                    fail(CompileError::Kind::type, t.loc, "invalid operand to '!': " + std::string(type_name(ot)));
                e->op = Op::log_not;
                e->type = Type::bool_;
            } else {
                if (!is_integral(ot))
                    fail(CompileError::Kind::type, t.loc, "invalid operand to '~': " + std::string(type_name(ot)));
                e->op = Op::bit_not;
                e->type = Type::int_;
                operand = convert(std::move(operand), Type::int_);
            }
            e->args.push_back(std::move(operand));
            return e;
        }
        if (t.kind == Tok::lparen && (peek(1).kind == Tok::kw_int || peek(1).kind == Tok::kw_float)
            && peek(2).kind == Tok::rparen) {
            take();
            Type to = type_kw(take());
            take();
            auto operand = unary();
            if (!is_numeric(operand->type))
                fail(CompileError::Kind::type, t.loc, "invalid cast operand");
            if (operand->type == to) {
                return operand;
            }
            auto c = convert(std::move(operand), to);
            c->loc = t.loc;
            return c;
        }
        return primary();
    }

    ExprPtr primary()
    {
        const Token& t = take();
        switch (t.kind) {
        case Tok::int_lit: {
            auto e = make_expr(ExprKind::int_lit, t.loc);
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc{} || v > 2147483648ull)
                fail(CompileError::Kind::syntax, t.loc, "integer literal out of range");
            e->int_value = static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
            if (v == 2147483648ull && !(pos_ >= 2 && toks_[pos_ - 2].kind == Tok::minus))
                fail(CompileError::Kind::syntax, t.loc, "integer literal out of range");
            e->type = Type::int_;
            return e;
        }
        case Tok::float_lit: {
            auto e = make_expr(ExprKind::float_lit, t.loc);
            e->float_value = std::strtod(std::string(t.text).c_str(), nullptr);
            e->type = Type::float_;
            return e;
        }
        case Tok::kw_true:
        case Tok::kw_false: {
            auto e = make_expr(ExprKind::bool_lit, t.loc);
            e->int_value = t.kind == Tok::kw_true ? 1 : 0;
            e->type = Type::bool_;
            return e;
        }
        case Tok::lparen: {
            auto e = expression();
            expect(Tok::rparen, "')'");
            return e;
        }
        case Tok::ident: break;
        default:
            fail(CompileError::Kind::syntax, t.loc, "expected expression near '" + std::string(t.text) + "'");
        }

        if (t.text == "tid") {
            auto e = make_expr(ExprKind::tid, t.loc);
            e->type = Type::int_;
            return e;
        }
        if (peek().kind == Tok::lparen) {
            take();
            Op op{};
            if (t.text == "sqrt")
                op = Op::sqrt;
            else if (t.text == "fabs")
                op = Op::fabs;
            else
                fail(CompileError::Kind::unknown_intrinsic, t.loc, "unknown intrinsic '" + std::string(t.text) + "'");
            auto arg = expression();
            expect(Tok::rparen, "')'");
            if (!is_numeric(arg->type))
                fail(CompileError::Kind::type, t.loc, "invalid argument to " + std::string(t.text));
            auto e = make_expr(ExprKind::call, t.loc);
            e->op = op;
            e->type = Type::float_;
            e->args.push_back(convert(std::move(arg), Type::float_));
            return e;
        }
        if (const BufferDecl* buf = find_buffer(t.text)) {
            if (buf->is_output)
                fail(CompileError::Kind::type, t.loc, "output buffer '" + buf->name + "' is write-only");
            expect(Tok::lbracket, "'['");
            auto idx = expression();
            expect(Tok::rbracket, "']'");
            if (!is_integral(idx->type))
                fail(CompileError::Kind::type, idx->loc, "buffer index must be int");
            auto e = make_expr(ExprKind::load, t.loc);
            e->name = buf->name;
            e->ref = buf->slot;
            e->type = buf->elem;
            e->args.push_back(convert(std::move(idx), Type::int_));
            return e;
        }
        int id = lookup_local(t);
        auto e = make_expr(ExprKind::var, t.loc);
        e->name = std::string(t.text);
        e->ref = id;
        e->type = locals_[static_cast<std::size_t>(id)];
        return e;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    Program* prog_ = nullptr;
    std::string entry_;
    std::vector<Type> locals_;
    std::vector<std::map<std::string, int, std::less<>>> scopes_;
    int loop_depth_ = 0;
};

} // namespace

Program parse_program(std::string_view source)
{
    Parser p(Lexer(source).run());
    return p.run();
}

std::vector<std::string> scan_entry_names(std::string_view source)
{
    constexpr std::string_view kw = "__entry";
    std::vector<std::string> names;
    auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    std::size_t pos = 0;
    while ((pos = source.find(kw, pos)) != std::string_view::npos) {
        bool starts_word = pos == 0 || !ident(source[pos - 1]);
        pos += kw.size();
        if (!starts_word || (pos < source.size() && ident(source[pos])))
            continue;
        while (pos < source.size() && std::isspace(static_cast<unsigned char>(source[pos])))
            ++pos;
        std::size_t start = pos;
        while (pos < source.size() && ident(source[pos]))
            ++pos;
        if (pos > start)
            names.emplace_back(source.substr(start, pos - start));
    }
    return names;
}

} // namespace gpc::kernelc
