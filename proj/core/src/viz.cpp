#include "flowlab/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "flowlab/error.hpp"

namespace flowlab::viz {

namespace {

constexpr double kW = 640.0, kH = 480.0, kPad = 56.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
    double lo = 1e300, hi = -1e300;
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (lo > hi) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
    double map(double v, double out_lo, double out_hi) const {
        return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
    }
};

std::ofstream open_svg(const std::string& path, const std::string& title) {
    std::ofstream os(path);
    if (!os) throw error("viz: cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH
       << "' viewBox='0 0 " << kW << " " << kH << "'>\n"
       << "<rect width='100%' height='100%' fill='white'/>\n"
       << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-family='sans-serif' "
       << "font-size='15'>" << title << "</text>\n";
    return os;
}

}  // namespace

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<Series>& series, bool log_y) {
    Range rx, ry;
    for (const auto& s : series) {
        for (double v : s.x) rx.add(v);
        for (double v : s.y) ry.add(log_y ? std::log10(std::max(v, 1e-300)) : v);
    }
    rx.pad();
    ry.pad();

    std::ofstream os = open_svg(path, title);
    os << "<rect x='" << kPad << "' y='" << kPad << "' width='" << kW - 2 * kPad << "' height='"
       << kH - 2 * kPad << "' fill='none' stroke='#999'/>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        os << "<polyline fill='none' stroke='" << kColors[si % 8] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = log_y ? std::log10(std::max(s.y[i], 1e-300)) : s.y[i];
            os << rx.map(s.x[i], kPad, kW - kPad) << "," << ry.map(y, kH - kPad, kPad) << " ";
        }
        os << "'/>\n";
        os << "<text x='" << kW - kPad + 4 << "' y='" << kPad + 16.0 * (si + 1)
           << "' font-family='sans-serif' font-size='11' fill='" << kColors[si % 8] << "'>"
           << s.label << "</text>\n";
    }
    os << "</svg>\n";
}

void svg_scatter(const std::string& path, const std::string& title,
                 const std::vector<std::pair<std::string, Tensor>>& sets) {
    Range rx, ry;
    for (const auto& [label, pts] : sets) {
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            rx.add(pts.at(i, 0));
            ry.add(pts.at(i, 1));
        }
    }
    rx.pad();
    ry.pad();

    std::ofstream os = open_svg(path, title);
    for (std::size_t si = 0; si < sets.size(); ++si) {
        const Tensor& pts = sets[si].second;
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            os << "<circle cx='" << rx.map(pts.at(i, 0), kPad, kW - kPad) << "' cy='"
               << ry.map(pts.at(i, 1), kH - kPad, kPad) << "' r='1.6' fill='" << kColors[si % 8]
               << "' fill-opacity='0.55'/>\n";
        }
        os << "<text x='" << kPad << "' y='" << kPad + 16.0 * (si + 1)
           << "' font-family='sans-serif' font-size='11' fill='" << kColors[si % 8] << "'>"
           << sets[si].first << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace flowlab::viz
