#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flowlab {

// Dense row-major tensor of doubles with dynamic rank. Nearly all of the
// library works with rank 1 (per-sample scalars) and rank 2 (batches of
// feature vectors).
class Tensor {
 public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    std::size_t extent(std::size_t axis) const;

    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;
    std::span<const double> row(std::size_t r) const;
    std::span<double> row(std::size_t r);

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(double v);
    void set_zero() { fill(0.0); }

    std::string shape_str() const;

 private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Throws shape_error with a message naming `what` when shapes differ.
void check_same_shape(const Tensor& a, const Tensor& b, const char* what);
// Throws numeric_error naming `what` if any entry is non-finite.
void check_finite(const Tensor& t, const char* what);

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace flowlab
