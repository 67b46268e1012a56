#include "gpc/bench/sweep.hpp"

#include <fstream>
#include <ostream>

namespace gpc::bench {

namespace {

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t population_seed(std::uint64_t base, problems::ProblemKind kind, std::size_t pop_size, std::size_t index)
{
    std::uint64_t h = splitmix(base);
    h = splitmix(h ^ static_cast<std::uint64_t>(kind));
    h = splitmix(h ^ pop_size);
    return splitmix(h ^ index);
}

SweepOutcome run_sweep(const SweepConfig& cfg, const backends::BackendOptions& opts, std::ostream* log)
{
    cfg.validate();
    std::ofstream csv(cfg.out, std::ios::binary);
    if (!csv)
        throw UsageError("cannot write " + cfg.out.string());
    write_csv_header(csv, timer_resolution_ns());

    SweepOutcome outcome;
    for (auto kind : cfg.problems) {
        auto problem = load_problem(cfg, kind);
        auto suite = problems::generate_cases(problem, cfg.seed);
        for (const auto& bk : cfg.backends) {
            for (std::size_t pop_size : cfg.pop_sizes) {
                std::string cell = problem.name + "/" + bk.label() + "/" + std::to_string(pop_size);
                std::unique_ptr<backends::Backend> backend;
                try {
                    backend = backends::make_backend(bk, opts);
                } catch (const std::exception& e) {
                    outcome.failed_cells.push_back(cell + ": " + e.what());
                    if (log)
                        *log << cell << ": backend failed to start: " << e.what() << '\n';
                    continue;
                }
                try {
                    for (std::size_t pi = 0; pi < cfg.populations; ++pi) {
                        auto params = cfg.evolution;
                        params.population_size = pop_size;
                        params.seed = population_seed(cfg.seed, kind, pop_size, pi);
                        auto pop = evolution::init_population(params);
                        evolution::Rng rng(params.seed ^ 0x5bd1e995u);
                        for (std::size_t g = 0; g < cfg.generations; ++g) {
                            auto step = evolution::step_generation(pop, problem, *backend, suite, params, rng);
                            const auto& r = step.report;
                            MetricRow row{problem.name, bk.type_name(), bk.daemons, pop_size, pi, g,
                                          r.ptx_ms,     r.jit_ms,       r.other_ms, r.total_ms};
                            write_csv_row(csv, row);
                            ++outcome.rows;
                            if (log)
                                *log << cell << " population " << pi << " generation " << g << ": best "
                                     << r.best.value << (r.best.valid ? "" : " (invalid)") << ", "
                                     << r.total_ms / static_cast<double>(pop_size) << " ms/ind\n";
                            pop = std::move(step.next);
                        }
                    }
                } catch (const std::exception& e) {
                    outcome.failed_cells.push_back(cell + ": " + e.what());
                    if (log)
                        *log << cell << ": " << e.what() << '\n';
                }
                csv.flush();
            }
        }
    }
    return outcome;
}

} // namespace gpc::bench
