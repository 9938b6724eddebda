#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowlab/rng.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::data {

// Source distribution of clean samples.
class DataSampler {
 public:
    virtual ~DataSampler() = default;
    virtual std::size_t dim() const = 0;
    virtual void sample(std::size_t n, Rng& rng, Tensor& out) const = 0;
    // Analytic mean where available; falls back on a large Monte-Carlo draw.
    virtual Tensor mean() const;

    Tensor sample(std::size_t n, Rng& rng) const {
        Tensor out({n, dim()});
        sample(n, rng, out);
        return out;
    }
};

// Isotropic Gaussian mixture with per-component weights.
class GaussianMixture final : public DataSampler {
 public:
    GaussianMixture(Tensor means, std::vector<double> sigmas, std::vector<double> weights);

    using DataSampler::sample;
    std::size_t dim() const override { return means_.cols(); }
    void sample(std::size_t n, Rng& rng, Tensor& out) const override;
    Tensor mean() const override;

    const Tensor& means() const { return means_; }
    const std::vector<double>& weights() const { return weights_; }

 private:
    Tensor means_;  // [k, d]
    std::vector<double> sigmas_;
    std::vector<double> weights_;  // normalized
    std::vector<double> cdf_;
};

// k equally weighted components on a circle of the given radius.
GaussianMixture eight_gaussians(double radius = 2.0, double sigma = 0.1, std::size_t k = 8);
// Two components at (-separation/2, 0) and (+separation/2, 0).
GaussianMixture two_gaussians(double separation = 3.0, double sigma = 0.3, double weight0 = 0.5);

// Uniform distribution over the black cells of a checkerboard covering
// [-extent, extent]^2 with cells x cells squares.
class Checkerboard final : public DataSampler {
 public:
    Checkerboard(double extent = 2.0, std::size_t cells = 4);
    using DataSampler::sample;
    std::size_t dim() const override { return 2; }
    void sample(std::size_t n, Rng& rng, Tensor& out) const override;
    Tensor mean() const override;

 private:
    double extent_;
    std::size_t cells_;
};

// Empirical distribution over points loaded from a CSV file (one sample
// per line); sampling draws rows with replacement.
class FileDataset final : public DataSampler {
 public:
    explicit FileDataset(const std::string& path);
    using DataSampler::sample;
    std::size_t dim() const override { return points_.cols(); }
    void sample(std::size_t n, Rng& rng, Tensor& out) const override;
    Tensor mean() const override;
    const Tensor& points() const { return points_; }

 private:
    Tensor points_;
};

// Standard normal prior samples.
Tensor sample_noise(std::size_t n, std::size_t d, Rng& rng);

// Largest pairwise distance over a point set (used for kernel bandwidths).
double data_diameter(const Tensor& points);

}  // namespace flowlab::data
