#include "flowlab/loss_map.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/error.hpp"

namespace flowlab::loss {

const char* loss_map_name(LossMapKind k) {
    switch (k) {
        case LossMapKind::mse: return "mse";
        case LossMapKind::pseudo_huber: return "pseudo_huber";
        case LossMapKind::hpf: return "hpf";
    }
    return "mse";
}

LossMapKind loss_map_from_name(const std::string& name) {
    if (name == "mse") return LossMapKind::mse;
    if (name == "pseudo_huber") return LossMapKind::pseudo_huber;
    if (name == "hpf") return LossMapKind::hpf;
    throw config_error("unknown loss map: " + name);
}

double default_ph_c(std::size_t d) {
    return 0.00054 * std::sqrt(static_cast<double>(d));
}

LossMap LossMap::mse() {
    return LossMap{};
}

LossMap LossMap::pseudo_huber(double c) {
    if (c <= 0.0) throw config_error("pseudo_huber: c must be positive");
    LossMap m;
    m.kind_ = LossMapKind::pseudo_huber;
    m.ph_c_ = c;
    return m;
}

LossMap LossMap::hpf(double lambda, std::size_t dim, BlurSpec blur) {
    if (lambda <= 0.0) throw config_error("hpf: lambda must be positive");
    if (dim == 0) throw config_error("hpf: feature dimension must be positive");
    LossMap m;
    m.kind_ = LossMapKind::hpf;
    m.lambda_ = lambda;
    m.dim_ = dim;

    // Blur taps.
    std::size_t radius = blur.radius;
    if (blur.sigma == 0.0) radius = 1;
    std::vector<double> w(2 * radius + 1);
    if (blur.sigma == 0.0) {
        w = {0.25, 0.5, 0.25};
    } else {
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double k = static_cast<double>(i) - static_cast<double>(radius);
            w[i] = std::exp(-0.5 * k * k / (blur.sigma * blur.sigma));
            sum += w[i];
        }
        for (double& x : w) x /= sum;
    }
    m.blur_kernel_ = w;

    // phi = (1 + lambda) I - lambda B as a single set of circulant taps.
    m.phi_kernel_.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) m.phi_kernel_[i] = -lambda * w[i];
    m.phi_kernel_[radius] += 1.0 + lambda;

    // Circulant spectra: b_j = w0 + sum_k 2 w_k cos(2 pi k j / n).
    m.hpf_eig_.resize(dim);
    m.phi_eig_.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        double bj = w[radius];
        for (std::size_t k = 1; k <= radius; ++k) {
            bj += 2.0 * w[radius + k] *
                  std::cos(2.0 * M_PI * static_cast<double>(k * j) / static_cast<double>(dim));
        }
        const double hj = 1.0 - bj;
        m.hpf_eig_[j] = hj;
        m.phi_eig_[j] = 1.0 + lambda * hj;
    }
    // Spectral certificate: blur eigenvalues in [0, 1] keeps the filter
    // spectrum in [0, 1] and phi's in [1, 1 + lambda].
    constexpr double kTol = 1e-9;
    for (std::size_t j = 0; j < dim; ++j) {
        if (m.hpf_eig_[j] < -kTol || m.hpf_eig_[j] > 1.0 + kTol) {
            throw config_error("hpf: blur kernel gives filter eigenvalue outside [0, 1]; "
                               "choose a narrower blur");
        }
        if (m.phi_eig_[j] < 1.0 - kTol) {
            throw config_error("hpf: phi eigenvalue below 1, map is not certifiably invertible");
        }
    }
    return m;
}

double LossMap::hpf_max_eigenvalue() const {
    if (kind_ != LossMapKind::hpf) throw error("hpf_max_eigenvalue: not an hpf map");
    return *std::max_element(hpf_eig_.begin(), hpf_eig_.end());
}

Tensor LossMap::circulant_eigenvector(std::size_t freq, bool use_sin) const {
    if (kind_ != LossMapKind::hpf) throw error("circulant_eigenvector: not an hpf map");
    Tensor v({dim_});
    for (std::size_t k = 0; k < dim_; ++k) {
        const double arg = 2.0 * M_PI * static_cast<double>(freq * k) / static_cast<double>(dim_);
        v[k] = use_sin ? std::sin(arg) : std::cos(arg);
    }
    return v;
}

namespace {

Tensor conv_rows(const Tensor& x, std::span<const double> kernel) {
    const std::size_t m = x.rows(), n = x.cols();
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = x.data() + i * n;
        double* yi = out.data() + i * n;
        for (std::ptrdiff_t j = 0; j < nn; ++j) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -r; k <= r; ++k) {
                const std::ptrdiff_t idx = ((j + k) % nn + nn) % nn;
                acc += kernel[static_cast<std::size_t>(k + r)] * xi[idx];
            }
            yi[j] = acc;
        }
    }
    return out;
}

}  // namespace

Tensor LossMap::apply_phi(const Tensor& x) const {
    switch (kind_) {
        case LossMapKind::mse: return x;
        case LossMapKind::hpf:
            if (x.cols() != dim_) {
                throw shape_error("apply_phi: feature dim " + std::to_string(x.cols()) +
                                  " does not match map dim " + std::to_string(dim_));
            }
            return conv_rows(x, phi_kernel_);
        case LossMapKind::pseudo_huber:
            throw error("apply_phi: pseudo_huber is not a linear-map loss");
    }
    return x;
}

ad::Var LossMap::apply_phi(const ad::Var& x) const {
    switch (kind_) {
        case LossMapKind::mse: return x;
        case LossMapKind::hpf:
            if (x.value().cols() != dim_) {
                throw shape_error("apply_phi: feature dim mismatch");
            }
            return ad::circular_conv(x, phi_kernel_);
        case LossMapKind::pseudo_huber:
            throw error("apply_phi: pseudo_huber is not a linear-map loss");
    }
    return x;
}

Tensor LossMap::apply_phi_t_phi(const Tensor& g) const {
    // Symmetric taps make phi^T = phi.
    return apply_phi(apply_phi(g));
}

ad::Var LossMap::per_sample(const ad::Var& denoised, const Tensor& x0, const Tensor& t) const {
    check_same_shape(denoised.value(), x0, "per_sample_loss");
    const std::size_t m = x0.rows();
    if (t.rank() != 1 || t.size() != m) {
        throw shape_error("per_sample_loss: t must be [batch]");
    }
    ad::Var out;
    switch (kind_) {
        case LossMapKind::mse: {
            out = ad::sum_rows(ad::square(ad::sub(denoised, ad::Var::constant(x0))));
            break;
        }
        case LossMapKind::hpf: {
            ad::Var diff = ad::sub(apply_phi(denoised), ad::Var::constant(apply_phi(x0)));
            out = ad::sum_rows(ad::square(diff));
            break;
        }
        case LossMapKind::pseudo_huber: {
            Tensor ct2({m});
            Tensor inv_t({m});
            for (std::size_t i = 0; i < m; ++i) {
                if (t[i] <= 0.0) throw numeric_error("pseudo_huber: t must be positive");
                ct2[i] = ph_c_ * t[i] * ph_c_ * t[i];
                inv_t[i] = 1.0 / t[i];
            }
            ad::Var ss = ad::sum_rows(ad::square(ad::sub(denoised, ad::Var::constant(x0))));
            out = ad::add_scalar(ad::scale_rows(ad::sqrt_(ad::add_const(ss, ct2)), inv_t), -ph_c_);
            break;
        }
    }
    const Tensor& v = out.value();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw numeric_error("per_sample_loss: non-finite loss at sample " + std::to_string(i));
        }
    }
    return out;
}

Tensor LossMap::per_sample_value(const Tensor& denoised, const Tensor& x0,
                                 const Tensor& t) const {
    ad::Var d = ad::Var::constant(denoised);
    return per_sample(d, x0, t).value();
}

}  // namespace flowlab::loss
