#pragma once

#include <array>
#include <memory>
#include <string>

#include "flowlab/loss_map.hpp"
#include "flowlab/nn.hpp"
#include "flowlab/time_dist.hpp"

namespace flowlab::loss {

// x_t = (1 - t) x0 + t x1, broadcasting t over features. t entries must
// lie in [0, 1].
Tensor interpolate(const Tensor& x0, const Tensor& x1, const Tensor& t);

// Draws n times from dist, clamped into [t_min, t_max] to keep the
// singular weight rules finite at the interval ends.
Tensor sample_times(const TimeDist& dist, std::size_t n, Rng& rng, double t_min = 1e-3,
                    double t_max = 1.0 - 1e-6);

// Small MLP f(x_t, t) -> scalar used by the loss-normalization weight
// w = exp(-f); trained jointly with the denoiser through the uncertainty
// objective exp(-f) l + f, whose minimizer is f = log l.
class TrackerNet {
 public:
    TrackerNet(std::size_t data_dim, std::size_t hidden, Rng& rng);

    ad::Var forward_train(const Tensor& x_t, const Tensor& t);  // [m]
    Tensor forward(const Tensor& x_t, const Tensor& t) const;
    std::vector<ad::Var>& params() { return net_.params(); }

 private:
    nn::Denoiser net_;  // 1-d output head reuses the MLP machinery
};

// Per-sample value of the uncertainty objective; minimized at f = log(l).
double tracker_objective(double f, double l);

enum class WeightKind { one, inv_t, inv_t2, edm, batch_norm, tracker };

const char* weight_kind_name(WeightKind k);
WeightKind weight_kind_from_name(const std::string& name);

// Loss weight w(x_t, t) > 0. Stateless kinds are pure in t; batch_norm
// keeps a running per-t-bin mean of losses (64 uniform bins, decay 0.99)
// and weighs by its reciprocal; tracker carries a jointly trained net.
class WeightRule {
 public:
    static WeightRule one();
    static WeightRule inv_t();
    static WeightRule inv_t2();
    static WeightRule edm();
    static WeightRule batch_norm();
    static WeightRule tracker(std::size_t data_dim, std::size_t hidden, Rng& rng);

    WeightKind kind() const { return kind_; }
    bool has_tracker() const { return tracker_ != nullptr; }
    TrackerNet& tracker_net();
    const TrackerNet& tracker_net() const;

    // Stop-gradient weights for the non-tracker kinds; batch_norm also
    // folds the batch into its running bins. Requires t in (0, 1).
    Tensor weights(const Tensor& t, const Tensor& detached_loss);
    // Pure weight at a single (x_t, t); tracker evaluates its net.
    double weight_at(const Tensor& x_t_row, double t) const;

    std::vector<ad::Var> trainable_params();

    static constexpr std::size_t kBins = 64;
    static constexpr double kBinDecay = 0.99;
    const std::array<double, kBins>& bin_means() const { return bins_; }

 private:
    WeightKind kind_ = WeightKind::one;
    std::shared_ptr<TrackerNet> tracker_;
    std::array<double, kBins> bins_{};
};

struct BatchLossResult {
    ad::Var objective;     // scalar; mean of w l (+ tracker regularizer)
    double weighted_loss;  // mean of effective w l, detached
    double raw_loss;       // mean of per-sample l
    Tensor weights;        // effective per-sample weights
    Tensor t;              // times used
};

// Weighted generalized loss on an aligned batch at explicit times.
BatchLossResult weighted_batch_loss(nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    const Tensor& t, WeightRule& rule, const LossMap& map,
                                    bool training, Rng& rng, const Tensor* label = nullptr);

// Convenience wrapper that samples t from dist first.
BatchLossResult weighted_batch_loss(nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    WeightRule& rule, const TimeDist& dist, const LossMap& map,
                                    bool training, Rng& rng, const Tensor* label = nullptr);

struct LossSpread {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    double ratio() const;  // max / min
};

// Spread of per-sample losses l(x0_i, D(x_t_i, t)) over a coupled batch
// at one fixed t. Requires at least 2 pairs.
LossSpread relative_loss_diagnostic(const nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    double t, const LossMap& map);

}  // namespace flowlab::loss
