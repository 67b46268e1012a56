#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gpc/bench/metrics.hpp"

namespace gpc::bench {

struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Data extremes widened by 5% of the span on each side. A zero span is
/// widened by 5% of the magnitude (or by 1 around zero).
AxisRange padded_range(double min, double max);

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points; // sorted by x
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Self-contained SVG line chart. Byte-identical for identical input.
std::string render_svg(const Chart& c);

/// Two charts per problem: `<problem>_per_individual.svg` and
/// `<problem>_total.svg`, one series per backend. Returns the written
/// paths; an empty row set writes nothing.
std::vector<std::filesystem::path> emit_plots(const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir);

} // namespace gpc::bench
