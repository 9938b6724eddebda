#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowlab/autograd.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::loss {

enum class LossMapKind { mse, pseudo_huber, hpf };

const char* loss_map_name(LossMapKind k);
LossMapKind loss_map_from_name(const std::string& name);

// Circular blur over the feature axis. sigma = 0 selects the binomial
// kernel [1/4, 1/2, 1/4] (radius forced to 1); otherwise Gaussian taps
// exp(-k^2 / (2 sigma^2)), k = -radius..radius, normalized to sum 1.
struct BlurSpec {
    std::size_t radius = 1;
    double sigma = 0.0;
};

// Conventional pseudo-Huber constant for dimension d.
double default_ph_c(std::size_t d);

// Per-sample losses l(x0, y) between the clean sample and the denoiser
// output y, where:
//   mse:          |x0 - y|^2
//   pseudo_huber: (1/t) * (|x0 - y|^2 + (c t)^2)^(1/2) - c
//   hpf:          |phi(x0) - phi(y)|^2 with phi = I + lambda * (I - blur),
// phi acting as a circular convolution over the feature axis. The blur
// eigenvalues lie in [0, 1], so phi has spectrum in [1, 1 + lambda] and is
// invertible; this is verified at construction.
class LossMap {
 public:
    static LossMap mse();
    static LossMap pseudo_huber(double c);
    static LossMap hpf(double lambda, std::size_t dim, BlurSpec blur = {});

    LossMapKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    double ph_c() const { return ph_c_; }
    std::size_t dim() const { return dim_; }

    // Action of phi (identity for mse; undefined for pseudo_huber).
    Tensor apply_phi(const Tensor& x) const;
    ad::Var apply_phi(const ad::Var& x) const;
    // phi^T phi applied to a batch of gradients (phi is symmetric here,
    // so this is phi applied twice).
    Tensor apply_phi_t_phi(const Tensor& g) const;

    // Eigenvalues of phi on the circulant Fourier basis (hpf only).
    const std::vector<double>& phi_eigenvalues() const { return phi_eig_; }
    // Eigenvalues of the high-pass filter I - blur (hpf only).
    const std::vector<double>& hpf_eigenvalues() const { return hpf_eig_; }
    double hpf_max_eigenvalue() const;
    // Real circulant eigenvectors: cos/sin waves for frequency j.
    Tensor circulant_eigenvector(std::size_t freq, bool use_sin = false) const;

    // Per-sample loss on a batch: denoised [m, d], x0 [m, d], t [m] -> [m].
    ad::Var per_sample(const ad::Var& denoised, const Tensor& x0, const Tensor& t) const;
    Tensor per_sample_value(const Tensor& denoised, const Tensor& x0, const Tensor& t) const;

 private:
    LossMapKind kind_ = LossMapKind::mse;
    double lambda_ = 0.0;
    double ph_c_ = 0.0;
    std::size_t dim_ = 0;
    std::vector<double> blur_kernel_;  // taps, center at index radius
    std::vector<double> phi_kernel_;   // taps of I + lambda (I - blur)
    std::vector<double> phi_eig_;
    std::vector<double> hpf_eig_;
};

}  // namespace flowlab::loss
