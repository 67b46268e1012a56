#include <doctest.h>

#include <cmath>

#include "gpc/kernelc/compiler.hpp"
#include "gpc/problems.hpp"
#include "gpc/vm.hpp"

using namespace gpc;

namespace {

kernelc::ModuleBinary build(const std::string& body, const char* out_type = "int")
{
    kernelc::SourceUnit u{"__in int a[];\n__out " + std::string(out_type) + " out[];\n__entry k() {\n" + body + "\n}\n",
                          {"k"}};
    return kernelc::compile_unit(u).module;
}

vm::DeviceBuffers ints(std::size_t n)
{
    HostArray a{"a", false, 1, {}, {}};
    for (std::size_t i = 0; i < n; ++i)
        a.ints.push_back(static_cast<std::int32_t>(i));
    return {{a}, false};
}

} // namespace

TEST_CASE("warp rounding")
{
    CHECK(vm::allocated_threads(32) == 32);
    CHECK(vm::allocated_threads(33) == 64);
    CHECK(vm::allocated_threads(0) == 0);
    auto m = build("out[tid] = tid;");
    auto r = vm::launch(m, {.entry = "k", .requested_threads = 33}, ints(33));
    CHECK(r.allocated_threads == 64);
    CHECK(r.outputs.size() == 33);
    CHECK(r.executed.size() == 64);
}

TEST_CASE("tid kernel")
{
    auto m = build("out[tid] = tid;");
    auto r = vm::launch(m, {.entry = "k", .requested_threads = 64}, ints(64));
    for (int i = 0; i < 64; ++i)
        CHECK(r.outputs[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("masked threads run but never write")
{
    // Canary: masked threads would write a[tid] + 1000, which falls outside
    // the requested slots; the visible outputs must stay the same.
    auto m = build("out[tid] = a[tid] + 1000;");
    auto r = vm::launch(m, {.entry = "k", .requested_threads = 5}, ints(5));
    REQUIRE(r.outputs.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(r.outputs[static_cast<std::size_t>(i)] == i + 1000);
    for (std::size_t t = 5; t < 32; ++t)
        CHECK(r.executed[t] > 0);
}

TEST_CASE("faults and budget")
{
    auto div = build("out[tid] = 10 / a[tid];");
    auto r = vm::launch(div, {.entry = "k", .requested_threads = 2}, ints(2));
    CHECK(r.status[0] == vm::ThreadStatus::fault);
    CHECK(r.outputs[0] == vm::sentinel(false));
    CHECK(r.status[1] == vm::ThreadStatus::ok);
    CHECK(r.outputs[1] == 10);

    auto fdiv = build("out[tid] = 1.0 / (a[tid] * 1.0);", "float");
    auto rf = vm::launch(fdiv, {.entry = "k", .requested_threads = 1}, {ints(1).inputs, true});
    CHECK(rf.status[0] == vm::ThreadStatus::ok);
    CHECK(std::isinf(rf.outputs[0]));

    auto spin = build("while (1) { }\nout[tid] = 1;");
    auto rs = vm::launch(spin, {.entry = "k", .requested_threads = 40, .instruction_budget = 500}, ints(40));
    for (auto s : rs.status)
        CHECK(s == vm::ThreadStatus::budget_exhausted);
    CHECK(rs.executed[0] <= 500);

    CHECK_THROWS_AS(vm::launch(spin, {.entry = "nope", .requested_threads = 1}, ints(1)), vm::LaunchError);
}

TEST_CASE("empty entry executes nothing but halt")
{
    auto m = build("");
    auto r = vm::launch(m, {.entry = "k", .requested_threads = 3}, ints(3));
    CHECK(r.executed[0] <= 1);
    CHECK(r.status[0] == vm::ThreadStatus::ok);
}

TEST_CASE("thread order and worker count do not matter")
{
    auto p = problems::make_problem(problems::ProblemKind::search);
    auto suite = problems::generate_cases(p, 5);
    auto m = kernelc::compile_unit(problems::known_solution(p)).module;
    vm::DeviceBuffers bufs{suite.inputs, false};
    vm::LaunchConfig base{.entry = m.entries[0].name, .requested_threads = suite.case_count};
    auto ref = vm::launch(m, base, bufs);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto cfg = base;
        cfg.shuffle_seed = seed;
        cfg.workers = 1 + static_cast<unsigned>(seed % 3);
        auto r = vm::launch(m, cfg, bufs);
        CHECK(r.outputs == ref.outputs);
        CHECK(r.executed == ref.executed);
    }
}

TEST_CASE("run_population shapes")
{
    auto p = problems::make_problem(problems::ProblemKind::mul5);
    auto suite = problems::generate_cases(p, 1);
    std::vector<std::string> ph(20, "b0 = x0;\nb1 = x1;\nb2 = x2;\nb3 = x3;\nb4 = x4;\n"
                                    "b5 = x5;\nb6 = x6;\nb7 = x7;\nb8 = x8;\nb9 = x9;\n");
    std::vector<kernelc::ModuleBinary> mods{kernelc::compile_unit(problems::emit_batch_source(p, ph)).module};
    auto m = vm::run_population(mods, p, suite);
    CHECK(m.rows == 20);
    CHECK(m.cols == 1024);
    CHECK(m.values.size() == 20 * 1024);

    auto empty = vm::run_population({}, p, suite);
    CHECK(empty.rows == 0);
    CHECK(empty.values.empty());
}
