#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "gpc/bench/config.hpp"
#include "gpc/bench/metrics.hpp"
#include "gpc/bench/plot.hpp"
#include "gpc/bench/sweep.hpp"

using namespace gpc;
using namespace gpc::bench;

namespace fs = std::filesystem;

namespace {

MetricRow row(std::string problem, std::string backend, unsigned daemons, std::size_t pop, std::size_t g, double total)
{
    return {std::move(problem), std::move(backend), daemons, pop, 0, g, total * 0.5, total * 0.4, total * 0.1, total};
}

fs::path temp_dir(const std::string& tag)
{
    auto d = fs::temp_directory_path() / ("gpc_bench_test_" + tag + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const SpeedupEntry& find(const SpeedupSummary& s, const std::string& backend)
{
    return *std::find_if(s.entries.begin(), s.entries.end(), [&](const auto& e) { return e.backend == backend; });
}

} // namespace

TEST_CASE("default sweep shapes")
{
    auto full = SweepConfig::full();
    std::vector<std::size_t> want;
    for (std::size_t p = 20; p <= 300; p += 20)
        want.push_back(p);
    CHECK(full.pop_sizes == want);
    CHECK(full.populations * full.generations == 150);
    CHECK(full.backends.size() == 6);
    auto q = SweepConfig::quick();
    CHECK(q.pop_sizes == std::vector<std::size_t>{20, 100, 300});
    CHECK(q.populations == 3);
    CHECK(q.generations == 3);

    q.problems.clear();
    CHECK_THROWS_AS(q.validate(), UsageError);
}

TEST_CASE("json config overrides")
{
    auto c = config_from_json(R"j({"problems":["k6"],"pop_sizes":[40],"generations":2,"mutation_rate":0.1,
                                  "backends":["in_process","daemon_pool(3)"]})j",
                              SweepConfig::quick());
    CHECK(c.problems == std::vector{problems::ProblemKind::k6});
    CHECK(c.pop_sizes == std::vector<std::size_t>{40});
    CHECK(c.generations == 2);
    CHECK(c.evolution.mutation_rate == 0.1);
    CHECK(c.backends.back() == backends::BackendKind::daemon_pool(3));
    CHECK_THROWS_AS(config_from_json(R"({"bogus":1})", SweepConfig::quick()), UsageError);
    CHECK_THROWS_AS(config_from_json("{", SweepConfig::quick()), UsageError);
}

TEST_CASE("csv round trip")
{
    std::ostringstream os;
    write_csv_header(os, 25.0);
    MetricRow r{"k6", "daemon_pool", 4, 20, 1, 3, 0.75, 0.5, 0.25, 1.5};
    write_csv_row(os, r);
    auto text = os.str();
    CHECK(text.rfind("# timer_resolution_ns=", 0) == 0);
    CHECK(text.find(std::string(csv_header) + "\n") != std::string::npos);
    std::istringstream is(text);
    auto rows = read_csv(is);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == r);
    CHECK(backend_label(rows[0]) == "daemon_pool(4)");

    std::istringstream bad("problem,backend\n");
    CHECK_THROWS_AS(read_csv(bad), CsvError);
}

TEST_CASE("speedup ratios")
{
    std::vector<MetricRow> rows;
    for (std::size_t g = 0; g < 3; ++g) {
        rows.push_back(row("k6", "out_of_process", 0, 100, g, 1120));
        rows.push_back(row("k6", "in_process", 0, 100, g, 776));
        rows.push_back(row("k6", "daemon_pool", 8, 100, g, 213));
    }
    auto s = summarize_speedup(rows);
    CHECK(find(s, "in_process").vs_out_of_process == doctest::Approx(1.44).epsilon(0.005));
    CHECK(find(s, "daemon_pool(8)").vs_out_of_process == doctest::Approx(5.26).epsilon(0.005));
    CHECK(find(s, "in_process").vs_in_process == 1.0);
    CHECK(find(s, "out_of_process").vs_out_of_process == 1.0);
    CHECK(find(s, "in_process").per_individual_ms == doctest::Approx(7.76));
    CHECK(find(s, "in_process").generations == 3);

    auto shuffled = rows;
    std::mt19937 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::ostringstream a, b;
    write_summary_csv(a, s);
    write_summary_csv(b, summarize_speedup(shuffled));
    CHECK(a.str() == b.str());

    std::vector<MetricRow> no_base = {row("k6", "in_process", 0, 100, 0, 5)};
    CHECK_THROWS_AS(summarize_speedup(no_base), SummaryError);
}

TEST_CASE("plots")
{
    auto r = padded_range(10, 20);
    CHECK(r.lo == doctest::Approx(9.5));
    CHECK(r.hi == doctest::Approx(20.5));

    std::vector<MetricRow> rows;
    for (const char* p : {"search", "k6", "mul5"})
        for (std::size_t pop : {20u, 100u})
            rows.push_back(row(p, "in_process", 0, pop, 0, static_cast<double>(pop) * 0.3));
    auto dir = temp_dir("plots");
    auto files = emit_plots(rows, dir);
    CHECK(files.size() == 6);
    CHECK(fs::exists(dir / "k6_per_individual.svg"));
    CHECK(fs::exists(dir / "k6_total.svg"));

    std::ifstream f(dir / "k6_total.svg");
    std::string svg((std::istreambuf_iterator<char>(f)), {});
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 0);
    // Single backend, single series.
    std::size_t n = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1))
        ++n;
    CHECK(n == 1);
    // Axis ranges: totals 6 and 30, so y covers [4.8, 31.2].
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex("data-y-range=\"([^ ]+) ([^\"]+)\"")));
    CHECK(std::stod(m[1]) == doctest::Approx(4.8));
    CHECK(std::stod(m[2]) == doctest::Approx(31.2));

    auto dir2 = temp_dir("plots2");
    emit_plots(rows, dir2);
    std::ifstream g(dir2 / "k6_total.svg");
    std::string svg2((std::istreambuf_iterator<char>(g)), {});
    CHECK(svg == svg2);

    auto dir3 = temp_dir("plots3");
    CHECK(emit_plots({}, dir3).empty());
    CHECK(fs::is_empty(dir3));
    for (const auto& d : {dir, dir2, dir3})
        fs::remove_all(d);
}

TEST_CASE("sweep row count matches the arithmetic")
{
    auto dir = temp_dir("sweep");
    SweepConfig c;
    c.problems = {problems::ProblemKind::k6, problems::ProblemKind::search};
    c.backends = {backends::BackendKind::in_process(), backends::BackendKind::daemon_pool(2)};
    c.pop_sizes = {20, 40};
    c.populations = 2;
    c.generations = 3;
    c.out = dir / "m.csv";
    backends::BackendOptions o;
    o.executable = GPCOMP_EXE;
    auto outcome = run_sweep(c, o);
    CHECK(outcome.failed_cells.empty());
    CHECK(outcome.rows == 2 * 2 * 2 * 2 * 3);
    std::ifstream in(c.out);
    auto rows = read_csv(in);
    CHECK(rows.size() == outcome.rows);

    // A backend that cannot start is recorded and the rest of the sweep runs.
    o.executable = "/nonexistent/gpcomp";
    o.handshake_timeout = std::chrono::milliseconds(300);
    auto broken = run_sweep(c, o);
    CHECK(broken.failed_cells.size() == 4);
    CHECK(broken.rows == 2 * 1 * 2 * 2 * 3);
    fs::remove_all(dir);
}
