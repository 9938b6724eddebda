#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace flowlab::io {

// Deterministic CSV writer: doubles are printed with %.17g so repeated
// runs with the same inputs produce byte-identical files.
class CsvWriter {
 public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    void flush() { os_.flush(); }

    static std::string num(double v);
    static std::string num(std::size_t v);

 private:
    std::ofstream os_;
    std::size_t width_;
};

// Metrics table keyed by (experiment, metric, step, value, n, seed).
class MetricsSink {
 public:
    MetricsSink(const std::string& path, std::string experiment_id, std::uint64_t seed);

    void value(const std::string& metric, double v, std::size_t n = 0, std::size_t step = 0);
    void flush() { csv_.flush(); }

 private:
    CsvWriter csv_;
    std::string experiment_;
    std::uint64_t seed_;
};

}  // namespace flowlab::io
