#pragma once

#include <string>
#include <vector>

#include "flowlab/tensor.hpp"

namespace flowlab::viz {

// Minimal static SVG emitters for run diagnostics. Plots are for eyes
// only; nothing in the test suites reads them back.

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<Series>& series, bool log_y = false);

// 2-D point clouds; each set gets its own color.
void svg_scatter(const std::string& path, const std::string& title,
                 const std::vector<std::pair<std::string, Tensor>>& sets);

}  // namespace flowlab::viz
