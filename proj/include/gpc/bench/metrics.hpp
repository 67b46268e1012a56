#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpc::bench {

/// Timings are milliseconds for the whole generation.
struct MetricRow {
    std::string problem;
    std::string backend; // in_process, out_of_process or daemon_pool
    unsigned daemons = 0;
    std::size_t pop_size = 0;
    std::size_t population_index = 0;
    std::size_t generation = 0;
    double ptx_ms = 0.0;
    double jit_ms = 0.0;
    double other_ms = 0.0;
    double total_ms = 0.0;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

inline constexpr std::string_view csv_header =
    "problem,backend,daemons,pop_size,population_index,generation,ptx_ms,jit_ms,other_ms,total_ms";

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Measured tick of the steady clock, in nanoseconds.
double timer_resolution_ns();

/// `# timer_resolution_ns=...` followed by the header line.
void write_csv_header(std::ostream& os, double resolution_ns);
void write_csv_row(std::ostream& os, const MetricRow& r);
/// Skips `#` comment lines; requires the exact header.
std::vector<MetricRow> read_csv(std::istream& is);

std::string backend_label(const MetricRow& r);

struct SpeedupEntry {
    std::string problem;
    std::size_t pop_size = 0;
    std::string backend; // label, e.g. daemon_pool(4)
    std::size_t generations = 0;
    double per_individual_ms = 0.0;
    double total_ms = 0.0;
    double vs_out_of_process = 0.0; // out_of_process time / this time
    double vs_in_process = 0.0;     // in_process time / this time
};

struct SpeedupSummary {
    std::vector<SpeedupEntry> entries; // sorted by problem, pop size, backend
};

class SummaryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Means of total_ms over every generation of each cell. Throws
/// SummaryError when a cell has no in_process or out_of_process baseline.
SpeedupSummary summarize_speedup(const std::vector<MetricRow>& rows);

void write_summary_text(std::ostream& os, const SpeedupSummary& s);
void write_summary_csv(std::ostream& os, const SpeedupSummary& s);

} // namespace gpc::bench
