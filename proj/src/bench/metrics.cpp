#include "gpc/bench/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace gpc::bench {

namespace {

std::string fmt(double v, int prec = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ','))
        out.push_back(f);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

// Order-independent mean: values are summed in sorted order.
double mean(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

double timer_resolution_ns()
{
    using C = std::chrono::steady_clock;
    auto best = C::duration::max();
    for (int i = 0; i < 100; ++i) {
        auto a = C::now();
        auto b = C::now();
        while (b == a)
            b = C::now();
        best = std::min(best, b - a);
    }
    return std::chrono::duration<double, std::nano>(best).count();
}

void write_csv_header(std::ostream& os, double resolution_ns)
{
    os << "# timer_resolution_ns=" << fmt(resolution_ns, 1) << '\n' << csv_header << '\n';
}

void write_csv_row(std::ostream& os, const MetricRow& r)
{
    os << r.problem << ',' << r.backend << ',' << r.daemons << ',' << r.pop_size << ',' << r.population_index << ','
       << r.generation << ',' << fmt(r.ptx_ms) << ',' << fmt(r.jit_ms) << ',' << fmt(r.other_ms) << ','
       << fmt(r.total_ms) << '\n';
}

std::vector<MetricRow> read_csv(std::istream& is)
{
    std::vector<MetricRow> rows;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            if (line != csv_header)
                throw CsvError("line " + std::to_string(line_no) + ": unexpected header");
            header = true;
            continue;
        }
        auto f = split(line);
        if (f.size() != 10)
            throw CsvError("line " + std::to_string(line_no) + ": expected 10 fields");
        try {
            MetricRow r;
            r.problem = f[0];
            r.backend = f[1];
            r.daemons = static_cast<unsigned>(std::stoul(f[2]));
            r.pop_size = std::stoul(f[3]);
            r.population_index = std::stoul(f[4]);
            r.generation = std::stoul(f[5]);
            r.ptx_ms = std::stod(f[6]);
            r.jit_ms = std::stod(f[7]);
            r.other_ms = std::stod(f[8]);
            r.total_ms = std::stod(f[9]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw CsvError("line " + std::to_string(line_no) + ": bad number");
        }
    }
    if (!header)
        throw CsvError("missing header");
    return rows;
}

std::string backend_label(const MetricRow& r)
{
    if (r.backend == "daemon_pool")
        return r.backend + "(" + std::to_string(r.daemons) + ")";
    return r.backend;
}

SpeedupSummary summarize_speedup(const std::vector<MetricRow>& rows)
{
    using Key = std::tuple<std::string, std::size_t, std::string>;
    std::map<Key, std::vector<double>> per_ind;
    std::map<Key, std::vector<double>> totals;
    for (const auto& r : rows) {
        Key k{r.problem, r.pop_size, backend_label(r)};
        per_ind[k].push_back(r.total_ms / static_cast<double>(r.pop_size));
        totals[k].push_back(r.total_ms);
    }

    SpeedupSummary s;
    for (const auto& [k, v] : per_ind) {
        const auto& [problem, pop, label] = k;
        auto out_it = per_ind.find({problem, pop, "out_of_process"});
        auto in_it = per_ind.find({problem, pop, "in_process"});
        if (out_it == per_ind.end() || in_it == per_ind.end())
            throw SummaryError("missing baseline cell for " + problem + " pop " + std::to_string(pop)
                               + (out_it == per_ind.end() ? " (out_of_process)" : " (in_process)"));
        SpeedupEntry e;
        e.problem = problem;
        e.pop_size = pop;
        e.backend = label;
        e.generations = v.size();
        e.per_individual_ms = mean(v);
        e.total_ms = mean(totals[k]);
        e.vs_out_of_process = mean(out_it->second) / e.per_individual_ms;
        e.vs_in_process = mean(in_it->second) / e.per_individual_ms;
        s.entries.push_back(std::move(e));
    }
    return s;
}

void write_summary_text(std::ostream& os, const SpeedupSummary& s)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %6s %-16s %12s %12s %10s %10s\n", "problem", "pop", "backend", "ms/ind",
                  "total ms", "vs out", "vs in");
    os << buf;
    for (const auto& e : s.entries) {
        std::snprintf(buf, sizeof buf, "%-8s %6zu %-16s %12.4f %12.3f %10.2f %10.2f\n", e.problem.c_str(), e.pop_size,
                      e.backend.c_str(), e.per_individual_ms, e.total_ms, e.vs_out_of_process, e.vs_in_process);
        os << buf;
    }
}

void write_summary_csv(std::ostream& os, const SpeedupSummary& s)
{
    os << "problem,pop_size,backend,generations,per_individual_ms,total_ms,ratio_vs_out_of_process,ratio_vs_in_process\n";
    for (const auto& e : s.entries)
        os << e.problem << ',' << e.pop_size << ',' << e.backend << ',' << e.generations << ','
           << fmt(e.per_individual_ms) << ',' << fmt(e.total_ms) << ',' << fmt(e.vs_out_of_process, 4) << ','
           << fmt(e.vs_in_process, 4) << '\n';
}

} // namespace gpc::bench
