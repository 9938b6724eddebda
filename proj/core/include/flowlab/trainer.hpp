#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/couplings.hpp"
#include "flowlab/dataset.hpp"
#include "flowlab/losses.hpp"
#include "flowlab/nn.hpp"
#include "flowlab/optimizer.hpp"
#include "flowlab/projection.hpp"
#include "flowlab/sinkhorn.hpp"
#include "flowlab/solver.hpp"

namespace flowlab::train {

// Where training batches come from.
class CouplingSource {
 public:
    virtual ~CouplingSource() = default;
    virtual std::size_t dim() const = 0;
    virtual void sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) = 0;
};

// Fresh independent draws x0 ~ data, x1 ~ N(0, I) every batch.
class IndependentSource final : public CouplingSource {
 public:
    explicit IndependentSource(const data::DataSampler& dataset) : dataset_(dataset) {}
    std::size_t dim() const override { return dataset_.dim(); }
    void sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) override;

 private:
    const data::DataSampler& dataset_;
};

// Draws from a fixed pair store with its rho-mixing.
class PairStoreSource final : public CouplingSource {
 public:
    explicit PairStoreSource(const coupling::PairStore& store) : store_(store) {}
    std::size_t dim() const override { return store_.dim(); }
    void sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) override;

 private:
    const coupling::PairStore& store_;
};

// Per batch: draw b_coupling independent pairs, solve the entropic OT
// plan between them, sub-sample b_loss aligned pairs from the plan.
class MinibatchOtSource final : public CouplingSource {
 public:
    MinibatchOtSource(const data::DataSampler& dataset, std::size_t b_coupling, double eps,
                      std::size_t max_iter = 2000, bool warm_start = true,
                      std::optional<double> eps_decay_start = std::nullopt);
    std::size_t dim() const override { return dataset_.dim(); }
    void sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) override;
    std::size_t plans_solved() const { return plans_; }
    std::size_t last_iterations() const { return last_plan_.iterations; }

 private:
    const data::DataSampler& dataset_;
    std::size_t b_coupling_;
    double eps_;
    std::size_t max_iter_;
    bool warm_start_;
    std::optional<double> eps_decay_start_;
    coupling::SinkhornPlan last_plan_;
    std::size_t plans_ = 0;
};

struct WeightRuleConfig {
    loss::WeightKind kind = loss::WeightKind::one;
    std::size_t tracker_hidden = 32;
};

struct LossMapConfig {
    loss::LossMapKind kind = loss::LossMapKind::mse;
    double hpf_lambda = 10.0;
    loss::BlurSpec blur;
    double ph_c = 0.0;  // <= 0: conventional constant for the data dim
};

struct TrainConfig {
    std::size_t steps = 4000;
    std::size_t batch = 128;
    nn::AdamConfig opt{2e-4, 0.9, 0.999, 1e-8, 0.999};
    double lr_final_frac = 1.0;  // cosine decay to lr * frac when < 1
    WeightRuleConfig weight;
    loss::TimeDist time_dist;
    LossMapConfig loss_map;
    // Sampled times are clamped into [t_min, t_max] to keep the singular
    // weights finite.
    double t_min = 1e-3;
    double t_max = 1.0 - 1e-6;
    std::size_t log_every = 200;
};

loss::WeightRule make_weight_rule(const WeightRuleConfig& cfg, std::size_t data_dim, Rng& rng);
loss::LossMap make_loss_map(const LossMapConfig& cfg, std::size_t data_dim);

struct TrainLogRow {
    std::size_t step;
    double objective;
    double weighted_loss;
    double raw_loss;
    double lr;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    std::size_t skipped_steps = 0;
    double final_raw_loss = 0.0;
    std::vector<Tensor> ema;  // averaged denoiser parameters
};

// Optimizes the denoiser on batches from the source. Deterministic given
// (parameters, rng seed). A non-finite objective aborts with the step
// index in the message.
TrainResult train(nn::Denoiser& d, CouplingSource& source, const TrainConfig& cfg, Rng& rng,
                  const std::function<void(std::size_t, const TrainLogRow&)>& on_log = nullptr);

// One round: generate pairs from the teacher (optionally mixing forward
// pairs and projecting), then train a student initialized from the
// teacher on them.
struct ReflowRoundConfig {
    std::size_t n_backward_pairs = 8192;
    std::size_t n_forward_pairs = 0;   // 0 disables the forward pool
    double rho = 0.0;
    bool project = false;
    coupling::ProjectionConfig projection;
    ode::SolverCfg pair_solver;        // schedule set by caller
    TrainConfig train;
    bool init_from_teacher = true;
};

struct ReflowRoundResult {
    nn::Denoiser student;
    coupling::PairStore pairs;
    std::size_t dropped_pairs = 0;
    TrainResult train_result;
};

ReflowRoundResult reflow_round(const nn::Denoiser& teacher, const data::DataSampler& dataset,
                               const ReflowRoundConfig& cfg, Rng& rng);

}  // namespace flowlab::train
