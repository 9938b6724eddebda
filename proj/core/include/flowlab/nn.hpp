#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/autograd.hpp"
#include "flowlab/rng.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::nn {

enum class Activation { silu, relu, tanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Sinusoidal features of the scalar time input:
//   [t, sin(2*pi*f_k t), cos(2*pi*f_k t)],  f_k = base^(k/(freqs-1)), k = 0..freqs-1.
struct TimeEmbedding {
    std::size_t freqs = 8;
    double base = 64.0;

    std::size_t dim() const { return 1 + 2 * freqs; }
    void write(double t, double* out) const;
};

struct DenoiserConfig {
    std::size_t data_dim = 2;
    std::vector<std::size_t> hidden = {128, 128, 128};
    Activation activation = Activation::silu;
    TimeEmbedding time_embed;
    double dropout_p = 0.0;       // inverted dropout on hidden activations, in [0, 0.5]
    std::size_t label_dim = 0;    // width of one-hot conditioning, 0 = unconditional
    bool zero_init_output = true;
    // Optional preconditioned parameterization:
    //   D(x, t) = c_skip(t) x + c_out(t) F(c_in(t) x, t)
    // with the linear-interpolant bridge coefficients and sigma_data below.
    bool preconditioned = false;
    double sigma_data = 1.0;

    std::size_t input_dim() const { return data_dim + time_embed.dim() + label_dim; }
    void validate() const;
};

// Counts of velocity-time clampings (t below the floor).
struct VelocityDiag {
    std::size_t clamped = 0;
};

// Floor applied to t inside velocity evaluation; the 1/t factor in the
// flow ODE is singular at t = 0 and solvers never need the value there.
inline constexpr double kVelocityTimeFloor = 1e-4;

// velocity = (x_t - denoised) / max(t, floor), rowwise.
Tensor velocity_from_denoised(const Tensor& x_t, const Tensor& denoised, const Tensor& t,
                              VelocityDiag* diag = nullptr);

// MLP mapping (x_t, t [, label]) to a prediction of the clean sample x0.
// Forward is deterministic given parameters when dropout is disabled
// (training=false or dropout_p=0).
class Denoiser {
 public:
    Denoiser(DenoiserConfig cfg, Rng& init_rng);

    const DenoiserConfig& config() const { return cfg_; }
    std::size_t data_dim() const { return cfg_.data_dim; }

    std::vector<ad::Var>& params() { return params_; }
    const std::vector<ad::Var>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return param_names_; }
    std::size_t param_count() const;

    // Fast evaluation without building a graph. x_t: [m, d]; t: [m].
    // label (optional): [m, label_dim]. training=true requires rng.
    Tensor denoise(const Tensor& x_t, const Tensor& t, const Tensor* label = nullptr,
                   bool training = false, Rng* rng = nullptr) const;

    // Graph-building forward for training; same math as denoise().
    ad::Var denoise_train(const Tensor& x_t, const Tensor& t, const Tensor* label,
                          bool training, Rng& rng);

    Tensor velocity(const Tensor& x_t, const Tensor& t, const Tensor* label = nullptr,
                    VelocityDiag* diag = nullptr) const;

    void copy_params_from(const Denoiser& other);
    std::vector<Tensor> snapshot_params() const;
    void load_params(const std::vector<Tensor>& values);
    std::uint64_t param_hash() const;

 private:
    Tensor assemble_input(const Tensor& x_t, const Tensor& t, const Tensor* label,
                          Tensor* c_skip_col, Tensor* c_out_col) const;

    DenoiserConfig cfg_;
    std::vector<ad::Var> params_;        // w0, b0, w1, b1, ...
    std::vector<std::string> param_names_;
};

// --- checkpoints -----------------------------------------------------------

// Versioned JSON checkpoint with a shape manifest and flat float arrays.
// Loading validates every stored shape against the reconstructed config.
void save_checkpoint(const std::string& path, const Denoiser& d,
                     const std::vector<Tensor>* ema = nullptr);
struct Checkpoint {
    DenoiserConfig config;
    std::vector<Tensor> params;
    std::vector<Tensor> ema;  // empty if absent
};
Checkpoint load_checkpoint(const std::string& path);
Denoiser denoiser_from_checkpoint(const Checkpoint& ckpt, bool use_ema = false);

}  // namespace flowlab::nn
