#include "gpc/bench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gpc::bench {

namespace {

using nlohmann::json;

std::vector<std::size_t> range_sizes(std::size_t from, std::size_t to, std::size_t step)
{
    std::vector<std::size_t> v;
    for (std::size_t s = from; s <= to; s += step)
        v.push_back(s);
    return v;
}

std::vector<backends::BackendKind> backends_with(std::vector<unsigned> daemons)
{
    std::vector<backends::BackendKind> v{backends::BackendKind::in_process(), backends::BackendKind::out_of_process()};
    for (unsigned k : daemons)
        v.push_back(backends::BackendKind::daemon_pool(k));
    return v;
}

std::string read_text(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw UsageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

SweepConfig SweepConfig::full()
{
    SweepConfig c;
    c.problems = {problems::ProblemKind::search, problems::ProblemKind::k6, problems::ProblemKind::mul5};
    c.backends = backends_with({2, 4, 6, 8});
    c.pop_sizes = range_sizes(20, 300, 20);
    c.populations = 15;
    c.generations = 10;
    return c;
}

SweepConfig SweepConfig::quick()
{
    SweepConfig c = full();
    c.pop_sizes = {20, 100, 300};
    c.populations = 3;
    c.generations = 3;
    return c;
}

void SweepConfig::validate() const
{
    if (problems.empty())
        throw UsageError("no problems selected");
    if (backends.empty())
        throw UsageError("no backends selected");
    if (pop_sizes.empty())
        throw UsageError("no population sizes selected");
    if (populations == 0 || generations == 0)
        throw UsageError("populations and generations must be positive");
    for (auto n : pop_sizes)
        if (n < 2)
            throw UsageError("population sizes must be at least 2");
    for (const auto& b : backends)
        if (b.type == backends::BackendType::daemon_pool && b.daemons == 0)
            throw UsageError("daemon_pool needs at least one daemon");
    auto e = evolution;
    e.population_size = pop_sizes.front();
    try {
        e.validate();
    } catch (const std::invalid_argument& ex) {
        throw UsageError(ex.what());
    }
}

SweepConfig config_from_json(std::string_view json_text, SweepConfig c)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (!j.is_object())
        throw UsageError("config: top level must be an object");

    static const std::set<std::string> known = {
        "problems",      "backends",        "daemons",         "pop_sizes",  "populations", "generations",
        "seed",          "crossover_rate",  "mutation_rate",   "tournament_size", "min_init_length",
        "max_init_length", "max_length",    "wrap_limit",      "elites",     "instruction_budget",
        "grammars",      "out"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()))
            throw UsageError("config: unknown key '" + it.key() + "'");

    try {
        if (j.contains("problems")) {
            c.problems.clear();
            for (const auto& p : j["problems"])
                c.problems.push_back(problems::parse_problem_name(p.get<std::string>()));
        }
        if (j.contains("backends") || j.contains("daemons")) {
            std::vector<unsigned> daemons = {2, 4, 6, 8};
            if (j.contains("daemons"))
                daemons = j["daemons"].get<std::vector<unsigned>>();
            std::vector<std::string> names = {"in_process", "out_of_process", "daemon_pool"};
            if (j.contains("backends"))
                names = j["backends"].get<std::vector<std::string>>();
            c.backends.clear();
            for (const auto& n : names) {
                if (n == "daemon_pool")
                    for (unsigned k : daemons)
                        c.backends.push_back(backends::BackendKind::daemon_pool(k));
                else
                    c.backends.push_back(backends::parse_backend(n));
            }
        }
        if (j.contains("pop_sizes"))
            c.pop_sizes = j["pop_sizes"].get<std::vector<std::size_t>>();
        if (j.contains("populations"))
            c.populations = j["populations"].get<std::size_t>();
        if (j.contains("generations"))
            c.generations = j["generations"].get<std::size_t>();
        if (j.contains("seed"))
            c.seed = j["seed"].get<std::uint64_t>();
        auto& e = c.evolution;
        if (j.contains("crossover_rate"))
            e.crossover_rate = j["crossover_rate"].get<double>();
        if (j.contains("mutation_rate"))
            e.mutation_rate = j["mutation_rate"].get<double>();
        if (j.contains("tournament_size"))
            e.tournament_size = j["tournament_size"].get<std::size_t>();
        if (j.contains("min_init_length"))
            e.min_init_length = j["min_init_length"].get<std::size_t>();
        if (j.contains("max_init_length"))
            e.max_init_length = j["max_init_length"].get<std::size_t>();
        if (j.contains("max_length"))
            e.max_length = j["max_length"].get<std::size_t>();
        if (j.contains("wrap_limit"))
            e.wrap_limit = j["wrap_limit"].get<std::size_t>();
        if (j.contains("elites"))
            e.elites = j["elites"].get<std::size_t>();
        if (j.contains("instruction_budget"))
            e.instruction_budget = j["instruction_budget"].get<std::uint64_t>();
        if (j.contains("grammars"))
            for (auto it = j["grammars"].begin(); it != j["grammars"].end(); ++it)
                c.grammar_paths[problems::parse_problem_name(it.key())] = it.value().get<std::string>();
        if (j.contains("out"))
            c.out = j["out"].get<std::string>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const problems::ProblemError& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

SweepConfig load_config(const std::filesystem::path& path, SweepConfig base)
{
    return config_from_json(read_text(path), std::move(base));
}

problems::ProblemSpec load_problem(const SweepConfig& cfg, problems::ProblemKind kind)
{
    auto it = cfg.grammar_paths.find(kind);
    if (it == cfg.grammar_paths.end())
        return problems::make_problem(kind);
    std::string text = read_text(it->second);
    return problems::make_problem(kind, text);
}

} // namespace gpc::bench
