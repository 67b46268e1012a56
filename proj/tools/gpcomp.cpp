// gpcomp: grammatical GP compile-cost benchmark.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gpc/backends/daemon.hpp"
#include "gpc/bench/config.hpp"
#include "gpc/bench/metrics.hpp"
#include "gpc/bench/plot.hpp"
#include "gpc/bench/selftest.hpp"
#include "gpc/bench/sweep.hpp"

namespace {

using namespace gpc;

enum Exit { ok = 0, usage = 1, compile_error = 2, protocol = 3 };

std::filesystem::path self_exe()
{
    std::error_code ec;
    auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    return ec ? std::filesystem::path("gpcomp") : p;
}

struct Overrides {
    std::string config;
    std::vector<std::string> problems;
    std::vector<std::string> backends;
    std::vector<unsigned> daemons;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--problem", o.problems, "search, k6 or mul5 (repeatable)");
    cmd->add_option("--backend", o.backends, "in_process, out_of_process, daemon_pool or daemon_pool(K)");
    cmd->add_option("--daemons", o.daemons, "daemon counts for daemon_pool");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--out", o.out, "metrics CSV path");
}

bench::SweepConfig apply(bench::SweepConfig c, const Overrides& o)
{
    if (!o.config.empty())
        c = bench::load_config(o.config, std::move(c));
    if (!o.problems.empty()) {
        c.problems.clear();
        for (const auto& p : o.problems)
            c.problems.push_back(problems::parse_problem_name(p));
    }
    if (!o.backends.empty() || !o.daemons.empty()) {
        std::vector<unsigned> ks = o.daemons.empty() ? std::vector<unsigned>{2, 4, 6, 8} : o.daemons;
        std::vector<std::string> names = o.backends;
        if (names.empty())
            names = {"in_process", "out_of_process", "daemon_pool"};
        c.backends.clear();
        for (const auto& n : names) {
            if (n == "daemon_pool")
                for (unsigned k : ks)
                    c.backends.push_back(backends::BackendKind::daemon_pool(k));
            else
                c.backends.push_back(backends::parse_backend(n));
        }
    }
    if (o.seed)
        c.seed = *o.seed;
    if (!o.out.empty())
        c.out = o.out;
    return c;
}

int report_sweep(const bench::SweepOutcome& r)
{
    std::cerr << r.rows << " rows written\n";
    for (const auto& f : r.failed_cells)
        std::cerr << "failed cell " << f << '\n';
    return r.failed_cells.empty() ? ok : protocol;
}

void summarize(const std::filesystem::path& csv, const std::string& plots, const std::string& summary_csv)
{
    std::ifstream in(csv);
    auto rows = bench::read_csv(in);
    try {
        auto s = bench::summarize_speedup(rows);
        bench::write_summary_text(std::cout, s);
        if (!summary_csv.empty()) {
            std::ofstream f(summary_csv);
            bench::write_summary_csv(f, s);
        }
    } catch (const bench::SummaryError& e) {
        std::cerr << "warning: no speedup summary: " << e.what() << '\n';
    }
    if (!plots.empty()) {
        auto files = bench::emit_plots(rows, plots);
        if (files.empty())
            std::cerr << "warning: no rows, no plots written\n";
        for (const auto& f : files)
            std::cerr << "wrote " << f.string() << '\n';
    }
}

void trace_best(const bench::SweepConfig& cfg)
{
    auto p = bench::load_problem(cfg, cfg.problems.front());
    auto suite = problems::generate_cases(p, cfg.seed);
    auto params = cfg.evolution;
    params.population_size = cfg.pop_sizes.front();
    params.seed = bench::population_seed(cfg.seed, p.kind, params.population_size, 0);
    auto pop = evolution::init_population(params);
    auto backend = backends::make_backend(backends::BackendKind::in_process());
    auto ev = evolution::evaluate(pop, p, *backend, suite, params);
    auto merged = backends::merge_modules(ev.modules);
    if (merged.entries.empty())
        return;
    vm::LaunchConfig lc;
    lc.entry = merged.entries.front().name;
    lc.requested_threads = suite.case_count;
    lc.instruction_budget = params.instruction_budget;
    vm::DeviceBuffers bufs{suite.inputs, p.output_is_float()};
    auto r = vm::launch(merged, lc, bufs);
    std::cout << "# per-thread instruction counts for " << lc.entry << " (" << r.allocated_threads
              << " threads allocated)\n";
    for (std::size_t t = 0; t < r.executed.size(); ++t)
        std::cout << "thread " << t << ' ' << r.executed[t] << (t < suite.case_count ? "" : " masked") << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grammatical GP compile-cost benchmark"};
    app.require_subcommand(1);

    auto* bench_cmd = app.add_subcommand("bench", "run an experiment sweep");
    Overrides bench_o;
    bool quick = false;
    bool full = false;
    std::string plots_dir;
    std::string summary_csv;
    add_overrides(bench_cmd, bench_o);
    auto* q = bench_cmd->add_flag("--quick", quick, "pop sizes 20,100,300; 3 populations x 3 generations (default)");
    bench_cmd->add_flag("--full", full, "pop sizes 20..300 step 20; 15 populations x 10 generations")->excludes(q);
    bench_cmd->add_option("--plots", plots_dir, "write SVG charts to this directory");
    bench_cmd->add_option("--summary", summary_csv, "write the speedup summary CSV here");

    auto* run_cmd = app.add_subcommand("run", "evolve one population and report each generation");
    Overrides run_o;
    std::size_t pop_size = 100;
    std::size_t generations = 10;
    std::string export_cases;
    bool trace = false;
    add_overrides(run_cmd, run_o);
    run_cmd->add_option("--pop", pop_size, "population size");
    run_cmd->add_option("--generations", generations, "generations");
    run_cmd->add_option("--export-cases", export_cases, "write the test suite CSV here");
    run_cmd->add_flag("--trace", trace, "dump per-thread instruction counts of the first individual");

    auto* daemon_cmd = app.add_subcommand("daemon", "serve compile requests (started by the daemon pool)");
    std::string daemon_id;
    bool daemon_trace = false;
    daemon_cmd->add_option("--id", daemon_id, "daemon ID")->required();
    daemon_cmd->add_flag("--trace", daemon_trace, "log state transitions to stderr");

    auto* worker_cmd = app.add_subcommand("compile-worker", "compile one source file to a module file");
    std::string in_path;
    std::string out_path;
    worker_cmd->add_option("--in", in_path, "kernel source")->required();
    worker_cmd->add_option("--out", out_path, "module output")->required();

    auto* plot_cmd = app.add_subcommand("plot", "summarize a metrics CSV and draw charts");
    std::string plot_csv;
    std::string plot_dir = "plots";
    std::string plot_summary;
    plot_cmd->add_option("--csv", plot_csv, "metrics CSV")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", plot_dir, "output directory");
    plot_cmd->add_option("--summary", plot_summary, "write the speedup summary CSV here");

    auto* self_cmd = app.add_subcommand("selftest", "oracle, backend, partition and protocol checks");
    bench::SelftestOptions st;
    self_cmd->add_option("--individuals", st.individuals, "individuals per problem for the oracle check");
    self_cmd->add_option("--seed", st.seed, "seed");
    self_cmd->add_flag("--inject-bad-magic", st.corrupt_module_magic, "corrupt a module before decoding");
    self_cmd->add_flag("--kill-daemon", st.kill_daemon, "kill a daemon mid-run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    backends::BackendOptions bo;
    bo.executable = self_exe();

    try {
        if (*daemon_cmd)
            return backends::daemon_main(daemon_id, daemon_trace);
        if (*worker_cmd)
            return backends::compile_worker_main(in_path, out_path);

        if (*bench_cmd) {
            auto cfg = apply(full ? bench::SweepConfig::full() : bench::SweepConfig::quick(), bench_o);
            int rc = report_sweep(bench::run_sweep(cfg, bo, &std::cerr));
            summarize(cfg.out, plots_dir, summary_csv);
            return rc;
        }
        if (*run_cmd) {
            auto cfg = bench::SweepConfig::quick();
            cfg.problems = {problems::ProblemKind::search};
            cfg.backends = {backends::BackendKind::in_process()};
            cfg = apply(cfg, run_o);
            cfg.problems.resize(1);
            cfg.backends.resize(1);
            cfg.pop_sizes = {pop_size};
            cfg.populations = 1;
            cfg.generations = generations;
            if (run_o.out.empty())
                cfg.out = "run.csv";
            if (!export_cases.empty()) {
                auto p = bench::load_problem(cfg, cfg.problems.front());
                std::ofstream f(export_cases);
                problems::write_suite_csv(p, problems::generate_cases(p, cfg.seed), f);
            }
            int rc = report_sweep(bench::run_sweep(cfg, bo, &std::cout));
            if (trace)
                trace_best(cfg);
            return rc;
        }
        if (*plot_cmd) {
            summarize(plot_csv, plot_dir, plot_summary);
            return ok;
        }
        if (*self_cmd) {
            st.executable = bo.executable;
            auto rep = bench::selftest(st, &std::cout);
            std::cout << (rep.passed() ? "selftest passed\n" : "selftest FAILED\n");
            return rep.passed() ? ok : protocol;
        }
    } catch (const bench::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const problems::ProblemError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const backends::CompileFailure& e) {
        std::cerr << "compile error: " << e.what() << '\n';
        return compile_error;
    } catch (const backends::ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return protocol;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return protocol;
    }
    return ok;
}
