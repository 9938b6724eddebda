#pragma once

#include <vector>

#include "flowlab/autograd.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::nn {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double ema_decay = 0.9999;  // decay of the parameter EMA, in [0, 1)
};

// Adaptive-moment optimizer with bias correction and an exponential
// moving average of the parameters. Steps with any non-finite gradient
// are skipped (and counted); gradients are cleared either way.
class Adam {
 public:
    Adam(AdamConfig cfg, std::vector<ad::Var> params);

    // Applies one update. Returns false if the step was skipped.
    bool step();
    void zero_grad();

    double& lr() { return cfg_.lr; }
    const AdamConfig& config() const { return cfg_; }
    std::size_t steps() const { return t_; }
    std::size_t skipped() const { return skipped_; }

    const std::vector<Tensor>& ema() const { return ema_; }
    void reset_ema_to_params();

 private:
    AdamConfig cfg_;
    std::vector<ad::Var> params_;
    std::vector<Tensor> m_, v_, ema_;
    std::size_t t_ = 0;
    std::size_t skipped_ = 0;
};

}  // namespace flowlab::nn
