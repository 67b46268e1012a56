#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "gpc/grammar.hpp"
#include "gpc/kernelc/compiler.hpp"
#include "gpc/kernelc/interp.hpp"
#include "gpc/oracle.hpp"
#include "gpc/problems.hpp"

using namespace gpc;
using namespace gpc::kernelc;

namespace {

SourceUnit unit(std::string body, std::string name = "k")
{
    return {"__in int a[];\n__out int out[];\n__entry " + name + "() {\n" + body + "\n}\n", {name}};
}

// Mnemonics of the entry, skipping the header lines.
std::vector<std::string> mnemonics(const std::string& ir)
{
    std::vector<std::string> out;
    std::istringstream is(ir);
    std::string line;
    while (std::getline(is, line)) {
        auto p = line.find_first_not_of(' ');
        if (p == std::string::npos || line[p] == '.')
            continue;
        out.push_back(line.substr(p, line.find(' ', p) - p));
    }
    return out;
}

struct OptionsGuard {
    CompileOptions saved = current_options();
    ~OptionsGuard() { set_options(saved); }
};

} // namespace

TEST_CASE("lowering without folding")
{
    OptionsGuard g;
    set_options({.constant_folding = false});
    auto ir = compile_to_ir(unit("out[tid] = 1 + 2;"));
    auto m = mnemonics(ir.ir.text);
    std::vector<std::string> want = {"const.i", "const.i", "add.i"};
    REQUIRE(m.size() >= 4);
    CHECK(std::vector<std::string>(m.begin(), m.begin() + 3) == want);
    CHECK(std::find(m.begin(), m.end(), "st.i") != m.end());

    set_options({.constant_folding = true});
    auto folded = compile_to_ir(unit("out[tid] = 1 + 2;"));
    CHECK(folded.ir.text != ir.ir.text);
    CHECK(folded.ir.text.substr(0, folded.ir.text.find('\n')) != ir.ir.text.substr(0, ir.ir.text.find('\n')));
}

TEST_CASE("set_options is idempotent")
{
    OptionsGuard g;
    set_options({});
    auto a = compile_to_ir(unit("out[tid] = a[tid] * 3;")).ir;
    set_options({});
    auto b = compile_to_ir(unit("out[tid] = a[tid] * 3;")).ir;
    CHECK(a == b);
}

TEST_CASE("syntax error names the line")
{
    try {
        compile_to_ir(unit("int x = 1;\nout[tid] = ;"));
        FAIL("no error");
    } catch (const CompileError& e) {
        CHECK(e.kind() == CompileError::Kind::syntax);
        CHECK(e.loc().line == 5);
        CHECK(e.entry() == "k");
    }
}

TEST_CASE("type and name errors")
{
    CHECK_THROWS_AS(compile_to_ir(unit("out[tid] = y;")), CompileError);
    CHECK_THROWS_AS(compile_to_ir(unit("out[tid] = foo(1);")), CompileError);
    CHECK_THROWS_AS(compile_to_ir(unit("out[tid] = 1.5 % 2.0;")), CompileError);
    SourceUnit mismatch = unit("out[tid] = 1;");
    mismatch.entry_names = {"other"};
    CHECK_THROWS_AS(compile_to_ir(mismatch), CompileError);
}

TEST_CASE("determinism and round trip")
{
    auto u = unit("int s = 0;\nfor (int i = 0; i < 5; i++) { s += a[tid] * i; }\nout[tid] = s;");
    auto a = compile_unit(u);
    auto b = compile_unit(u);
    CHECK(a.bytes == b.bytes);
    auto decoded = decode_module(a.bytes);
    CHECK(decoded == a.module);
    CHECK(encode_module(decoded) == a.bytes);
}

TEST_CASE("two entries survive both stages")
{
    SourceUnit u{"__in int a[];\n__out int out[];\n__entry e0() { out[tid] = 1; }\n__entry e1() { out[tid] = 2; }\n",
                 {"e0", "e1"}};
    auto ir = compile_to_ir(u);
    auto mod = ir_to_module(ir.ir);
    CHECK(mod.module.entries.size() == 2);
    CHECK(scan_entry_names(u.text) == u.entry_names);
}

TEST_CASE("IR text round trip")
{
    auto ir = compile_to_ir(unit("if (a[tid] > 2) { out[tid] = 1; } else { out[tid] = 2; }"));
    CHECK(to_text(parse_ir(ir.ir.text)) == ir.ir.text);
    CHECK_THROWS_AS(parse_ir(".gpir 9 x\n"), IrFormatError);
}

TEST_CASE("decode rejects corrupt modules")
{
    auto c = compile_unit(unit("out[tid] = 4;"));
    auto bad = c.bytes;
    bad[0] = std::byte{'X'};
    CHECK_THROWS_AS(decode_module(bad), ModuleFormatError);
    auto cut = c.bytes;
    cut.resize(cut.size() - 3);
    CHECK_THROWS_AS(decode_module(cut), ModuleFormatError);
}

TEST_CASE("register pressure spills")
{
    std::string body;
    for (int i = 0; i < 80; ++i)
        body += "int v" + std::to_string(i) + " = a[tid] + " + std::to_string(i) + ";\n";
    body += "out[tid] = v0";
    for (int i = 1; i < 80; ++i)
        body += " + v" + std::to_string(i);
    body += ";";
    auto ir = compile_to_ir(unit(body));
    auto mod = ir_to_module(ir.ir, CodegenLimits{.max_registers = 8});
    CHECK(mod.module.entries[0].register_count <= 8);
    bool spills = false;
    for (auto w : mod.module.entries[0].code)
        spills |= Word::unpack(w).op == Opcode::spill_st;
    CHECK(spills);
}

TEST_CASE("interpreter semantics")
{
    auto prog = parse_program("__in int a[];\n__out int out[];\n"
                              "__entry wrap() { int m = 2147483647; out[tid] = m + a[tid]; }\n"
                              "__entry divz() { out[tid] = 7 / (a[tid] - a[tid]); }\n"
                              "__entry spin() { while (1) { } out[tid] = 0; }\n");
    std::vector<HostArray> in{{"a", false, 1, {1, 2}, {}}};
    auto w = interpret(prog, prog.entries[0], in, 0, 1000);
    CHECK(w.status == InterpStatus::ok);
    CHECK(w.value == static_cast<double>(INT32_MIN));
    CHECK(interpret(prog, prog.entries[1], in, 1, 1000).status == InterpStatus::fault);
    CHECK(interpret(prog, prog.entries[2], in, 0, 1000).status == InterpStatus::diverged);
}

TEST_CASE("compile guard serializes concurrent callers")
{
    reset_guard_stats();
    auto p = problems::make_problem(problems::ProblemKind::k6);
    auto u = problems::known_solution(p);
    std::vector<std::thread> ts;
    for (int t = 0; t < 8; ++t)
        ts.emplace_back([&] {
            for (int i = 0; i < 100; ++i)
                compile_to_ir(u);
        });
    for (auto& t : ts)
        t.join();
    auto s = guard_stats();
    CHECK(s.max_concurrent == 1);
    CHECK(s.acquisitions >= 800);
}

TEST_CASE("set_options waits for an in-flight compile")
{
    OptionsGuard g;
    auto p = problems::make_problem(problems::ProblemKind::mul5);
    std::vector<std::string> ph;
    for (std::uint64_t s = 0; ph.size() < 300; ++s) {
        auto d = grammar::derive(p.grammar, grammar::random_genotype(s, 100));
        if (d.completed)
            ph.push_back(d.phenotype);
    }
    auto big = problems::emit_batch_source(p, ph);
    reset_guard_stats();
    IrResult r;
    std::thread worker([&] { r = compile_to_ir(big); });
    while (guard_stats().acquisitions == 0)
        std::this_thread::yield();
    set_options({});
    auto returned = Clock::now();
    worker.join();
    CHECK(returned >= r.guard_left);
}

TEST_CASE("folding never changes results")
{
    OptionsGuard g;
    for (auto kind : {problems::ProblemKind::search, problems::ProblemKind::k6, problems::ProblemKind::mul5}) {
        auto p = problems::make_problem(kind);
        auto suite = problems::generate_cases(p, 2);
        std::vector<std::string> ph;
        for (std::uint64_t s = 0; ph.size() < 50; ++s) {
            auto d = grammar::derive(p.grammar, grammar::random_genotype(s, 60));
            if (d.completed)
                ph.push_back(d.phenotype);
        }
        auto u = problems::emit_batch_source(p, ph);
        set_options({.constant_folding = true});
        std::vector<ModuleBinary> on{compile_unit(u).module};
        set_options({.constant_folding = false});
        std::vector<ModuleBinary> off{compile_unit(u).module};
        auto a = vm::run_population(on, p, suite);
        auto b = vm::run_population(off, p, suite);
        CHECK(a.status == b.status);
        for (std::size_t i = 0; i < a.values.size(); ++i)
            if (a.status[i] == vm::ThreadStatus::ok)
                CHECK(oracle::floats_agree(a.values[i], b.values[i]));
    }
}

TEST_CASE("VM matches the AST interpreter")
{
    for (auto kind : {problems::ProblemKind::search, problems::ProblemKind::k6, problems::ProblemKind::mul5}) {
        auto p = problems::make_problem(kind);
        auto rep = oracle::check_oracle(p, problems::generate_cases(p, 4), 200, 4);
        INFO(rep.first_mismatch);
        CHECK(rep.passed());
    }
}
