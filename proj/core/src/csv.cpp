#include "flowlab/csv.hpp"

#include <cstdio>

#include "flowlab/error.hpp"

namespace flowlab::io {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : os_(path), width_(header.size()) {
    if (!os_) throw error("csv: cannot open " + path);
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) {
        throw error("csv: row width " + std::to_string(cells.size()) + " != header width " +
                    std::to_string(width_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os_ << ',';
        os_ << cells[i];
    }
    os_ << '\n';
}

std::string CsvWriter::num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string CsvWriter::num(std::size_t v) {
    return std::to_string(v);
}

MetricsSink::MetricsSink(const std::string& path, std::string experiment_id, std::uint64_t seed)
    : csv_(path, {"experiment", "metric", "step", "value", "n", "seed"}),
      experiment_(std::move(experiment_id)),
      seed_(seed) {}

void MetricsSink::value(const std::string& metric, double v, std::size_t n, std::size_t step) {
    csv_.row({experiment_, metric, CsvWriter::num(step), CsvWriter::num(v), CsvWriter::num(n),
              std::to_string(seed_)});
}

}  // namespace flowlab::io
