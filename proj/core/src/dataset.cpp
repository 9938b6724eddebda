#include "flowlab/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "flowlab/error.hpp"

namespace flowlab::data {

Tensor DataSampler::mean() const {
    Rng rng(0x6d65616eULL);
    const std::size_t n = 100000;
    Tensor s = sample(n, rng);
    Tensor mu({dim()});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim(); ++j) mu[j] += s[i * dim() + j];
    }
    for (std::size_t j = 0; j < dim(); ++j) mu[j] /= static_cast<double>(n);
    return mu;
}

GaussianMixture::GaussianMixture(Tensor means, std::vector<double> sigmas,
                                 std::vector<double> weights)
    : means_(std::move(means)), sigmas_(std::move(sigmas)), weights_(std::move(weights)) {
    const std::size_t k = means_.rows();
    if (sigmas_.size() != k || weights_.size() != k) {
        throw config_error("gaussian_mixture: means, sigmas, weights must have equal length");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw config_error("gaussian_mixture: negative component weight");
        total += w;
    }
    if (total <= 0.0) throw config_error("gaussian_mixture: weights sum to zero");
    cdf_.resize(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        weights_[i] /= total;
        acc += weights_[i];
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
}

void GaussianMixture::sample(std::size_t n, Rng& rng, Tensor& out) const {
    const std::size_t d = dim();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t c = 0;
        while (c + 1 < cdf_.size() && u >= cdf_[c]) ++c;
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = means_[c * d + j] + sigmas_[c] * rng.normal();
        }
    }
}

Tensor GaussianMixture::mean() const {
    const std::size_t k = means_.rows(), d = dim();
    Tensor mu({d});
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += weights_[c] * means_[c * d + j];
    }
    return mu;
}

GaussianMixture eight_gaussians(double radius, double sigma, std::size_t k) {
    Tensor means({k, 2});
    for (std::size_t i = 0; i < k; ++i) {
        const double ang = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(k);
        means[i * 2] = radius * std::cos(ang);
        means[i * 2 + 1] = radius * std::sin(ang);
    }
    return GaussianMixture(std::move(means), std::vector<double>(k, sigma),
                           std::vector<double>(k, 1.0));
}

GaussianMixture two_gaussians(double separation, double sigma, double weight0) {
    Tensor means({2, 2});
    means[0] = -separation / 2.0;
    means[1] = 0.0;
    means[2] = separation / 2.0;
    means[3] = 0.0;
    return GaussianMixture(std::move(means), {sigma, sigma}, {weight0, 1.0 - weight0});
}

Checkerboard::Checkerboard(double extent, std::size_t cells) : extent_(extent), cells_(cells) {
    if (extent <= 0.0 || cells < 2) throw config_error("checkerboard: bad extent/cells");
}

void Checkerboard::sample(std::size_t n, Rng& rng, Tensor& out) const {
    const double cell = 2.0 * extent_ / static_cast<double>(cells_);
    for (std::size_t i = 0; i < n; ++i) {
        // Rejection-free: pick a black cell, then a point inside it.
        const std::size_t row = rng.index(cells_);
        const std::size_t col_half = rng.index(cells_ / 2);
        const std::size_t col = 2 * col_half + (row % 2);
        out[i * 2] = -extent_ + (static_cast<double>(col) + rng.uniform()) * cell;
        out[i * 2 + 1] = -extent_ + (static_cast<double>(row) + rng.uniform()) * cell;
    }
}

Tensor Checkerboard::mean() const {
    // The occupied cells are symmetric under 180-degree rotation about the
    // origin when the cell count is even, so the mean is zero.
    return Tensor({2});
}

FileDataset::FileDataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("dataset.file: cannot open " + path);
    std::vector<double> values;
    std::size_t d = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(std::stod(cell));
            ++count;
        }
        if (d == 0) {
            d = count;
        } else if (count != d) {
            throw config_error("dataset.file: ragged row in " + path);
        }
    }
    if (d == 0) throw config_error("dataset.file: no data in " + path);
    const std::size_t rows = values.size() / d;
    points_ = Tensor({rows, d}, std::move(values));
}

void FileDataset::sample(std::size_t n, Rng& rng, Tensor& out) const {
    const std::size_t d = dim(), rows = points_.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = rng.index(rows);
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = points_[r * d + j];
    }
}

Tensor FileDataset::mean() const {
    const std::size_t rows = points_.rows(), d = dim();
    Tensor mu({d});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += points_[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(rows);
    return mu;
}

Tensor sample_noise(std::size_t n, std::size_t d, Rng& rng) {
    Tensor out({n, d});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.normal();
    return out;
}

double data_diameter(const Tensor& points) {
    const std::size_t n = points.rows(), d = points.cols();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = points[i * d + k] - points[j * d + k];
                ss += diff * diff;
            }
            best = std::max(best, ss);
        }
    }
    return std::sqrt(best);
}

}  // namespace flowlab::data
