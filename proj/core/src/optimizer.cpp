#include "flowlab/optimizer.hpp"

#include <cmath>

#include "flowlab/error.hpp"

namespace flowlab::nn {

Adam::Adam(AdamConfig cfg, std::vector<ad::Var> params)
    : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.ema_decay < 0.0 || cfg_.ema_decay >= 1.0) {
        throw config_error("adam: ema_decay must be in [0, 1)");
    }
    if (cfg_.lr <= 0.0) throw config_error("adam: lr must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    ema_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros(p.value().shape()));
        v_.push_back(Tensor::zeros(p.value().shape()));
        ema_.push_back(p.value());
    }
}

bool Adam::step() {
    // A parameter with no accumulated gradient contributes a zero update.
    bool finite = true;
    for (const auto& p : params_) {
        if (p.has_grad() && !p.grad().all_finite()) {
            finite = false;
            break;
        }
    }
    if (!finite) {
        ++skipped_;
        zero_grad();
        return false;
    }

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& theta = params_[pi].mutable_value();
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        const bool has = params_[pi].has_grad();
        const Tensor* g = has ? &params_[pi].grad() : nullptr;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        Tensor& e = ema_[pi];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            e[i] = cfg_.ema_decay * e[i] + (1.0 - cfg_.ema_decay) * theta[i];
        }
    }
    zero_grad();
    return true;
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Adam::reset_ema_to_params() {
    for (std::size_t i = 0; i < params_.size(); ++i) ema_[i] = params_[i].value();
}

}  // namespace flowlab::nn
