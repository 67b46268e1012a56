#include "gpc/bench/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace gpc::bench {

namespace {

constexpr double width = 720;
constexpr double height = 440;
constexpr double left = 80;
constexpr double right = 190;
constexpr double top = 50;
constexpr double bottom = 60;

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v)
{
    char buf[64];
    double a = std::fabs(v);
    if (a != 0.0 && (a < 0.01 || a >= 1e5))
        std::snprintf(buf, sizeof buf, "%.2e", v);
    else
        std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string exact(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

AxisRange padded_range(double min, double max)
{
    double span = max - min;
    if (span <= 0.0) {
        double pad = min == 0.0 ? 1.0 : std::fabs(min) * 0.05;
        return {min - pad, max + pad};
    }
    return {min - 0.05 * span, max + 0.05 * span};
}

std::string render_svg(const Chart& c)
{
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : c.series)
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) {
        xmin = ymin = 0.0;
        xmax = ymax = 1.0;
    }
    AxisRange xr = padded_range(xmin, xmax);
    AxisRange yr = padded_range(ymin, ymax);
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height)
         + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"12\"";
    s += " data-x-range=\"" + exact(xr.lo) + " " + exact(xr.hi) + "\" data-y-range=\"" + exact(yr.lo) + " "
         + exact(yr.hi) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(c.title)
         + "</text>\n";
    s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph)
         + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        s += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(fx)) + "\" y2=\""
             + num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(top + ph + 19) + "\" text-anchor=\"middle\">"
             + tick_label(fx) + "</text>\n";
        s += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(left + pw) + "\" y2=\""
             + num(py(fy)) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick_label(fy)
             + "</text>\n";
    }
    s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 14) + "\" text-anchor=\"middle\">"
         + escape(c.x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
         + num(top + ph / 2) + ")\">" + escape(c.y_label) + "</text>\n";

    for (std::size_t i = 0; i < c.series.size(); ++i) {
        const auto& ser = c.series[i];
        const char* colour = palette[i % std::size(palette)];
        std::string pts;
        for (auto [x, y] : ser.points)
            pts += (pts.empty() ? "" : " ") + num(px(x)) + "," + num(py(y));
        s += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts
             + "\"/>\n";
        for (auto [x, y] : ser.points)
            s += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" + colour + "\"/>\n";
        double ly = top + 10 + 20.0 * static_cast<double>(i);
        s += "<line x1=\"" + num(left + pw + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 40) + "\" y2=\""
             + num(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + num(left + pw + 46) + "\" y=\"" + num(ly + 4) + "\">" + escape(ser.name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir)
{
    std::vector<std::filesystem::path> written;
    if (rows.empty())
        return written;

    // problem -> backend -> pop -> per-generation totals
    std::map<std::string, std::map<std::string, std::map<std::size_t, std::vector<double>>>> cells;
    for (const auto& r : rows)
        cells[r.problem][backend_label(r)][r.pop_size].push_back(r.total_ms);

    std::filesystem::create_directories(out_dir);
    for (const auto& [problem, by_backend] : cells) {
        Chart per{problem + ": time per individual by population size", "population size", "ms per individual", {}};
        Chart tot{problem + ": time per generation by population size", "population size", "ms per generation", {}};
        for (const auto& [label, by_pop] : by_backend) {
            Series sp{label, {}};
            Series st{label, {}};
            for (const auto& [pop, v] : by_pop) {
                std::vector<double> sorted = v;
                std::sort(sorted.begin(), sorted.end());
                double sum = 0.0;
                for (double x : sorted)
                    sum += x;
                double m = sum / static_cast<double>(sorted.size());
                sp.points.emplace_back(static_cast<double>(pop), m / static_cast<double>(pop));
                st.points.emplace_back(static_cast<double>(pop), m);
            }
            per.series.push_back(std::move(sp));
            tot.series.push_back(std::move(st));
        }
        for (auto [chart, suffix] : {std::pair{&per, "_per_individual.svg"}, std::pair{&tot, "_total.svg"}}) {
            auto path = out_dir / (problem + suffix);
            std::ofstream f(path, std::ios::binary);
            f << render_svg(*chart);
            written.push_back(path);
        }
    }
    return written;
}

} // namespace gpc::bench
