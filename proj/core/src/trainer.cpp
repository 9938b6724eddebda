#include "flowlab/trainer.hpp"

#include <cmath>

#include "flowlab/error.hpp"
#include "flowlab/projection.hpp"

namespace flowlab::train {

void IndependentSource::sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) {
    x0 = dataset_.sample(batch, rng);
    x1 = data::sample_noise(batch, dataset_.dim(), rng);
}

void PairStoreSource::sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) {
    coupling::sample_pairs(store_, batch, rng, x0, x1);
}

MinibatchOtSource::MinibatchOtSource(const data::DataSampler& dataset, std::size_t b_coupling,
                                     double eps, std::size_t max_iter, bool warm_start,
                                     std::optional<double> eps_decay_start)
    : dataset_(dataset),
      b_coupling_(b_coupling),
      eps_(eps),
      max_iter_(max_iter),
      warm_start_(warm_start),
      eps_decay_start_(eps_decay_start) {
    if (b_coupling_ == 0) throw config_error("minibatch_ot: b_coupling must be positive");
}

void MinibatchOtSource::sample_batch(std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) {
    if (batch > b_coupling_) {
        throw config_error("minibatch_ot: loss batch exceeds b_coupling");
    }
    Tensor cx0 = dataset_.sample(b_coupling_, rng);
    Tensor cx1 = data::sample_noise(b_coupling_, dataset_.dim(), rng);
    coupling::SinkhornAccel accel;
    accel.eps_decay_start = eps_decay_start_;
    if (warm_start_ && plans_ > 0) accel.warm_start = &last_plan_;
    last_plan_ = coupling::sinkhorn_coupling(cx0, cx1, eps_, max_iter_, accel);
    ++plans_;
    coupling::subsample_plan(last_plan_, cx0, cx1, batch, rng, x0, x1);
}

loss::WeightRule make_weight_rule(const WeightRuleConfig& cfg, std::size_t data_dim, Rng& rng) {
    switch (cfg.kind) {
        case loss::WeightKind::one: return loss::WeightRule::one();
        case loss::WeightKind::inv_t: return loss::WeightRule::inv_t();
        case loss::WeightKind::inv_t2: return loss::WeightRule::inv_t2();
        case loss::WeightKind::edm: return loss::WeightRule::edm();
        case loss::WeightKind::batch_norm: return loss::WeightRule::batch_norm();
        case loss::WeightKind::tracker:
            return loss::WeightRule::tracker(data_dim, cfg.tracker_hidden, rng);
    }
    return loss::WeightRule::one();
}

loss::LossMap make_loss_map(const LossMapConfig& cfg, std::size_t data_dim) {
    switch (cfg.kind) {
        case loss::LossMapKind::mse: return loss::LossMap::mse();
        case loss::LossMapKind::pseudo_huber:
            return loss::LossMap::pseudo_huber(cfg.ph_c > 0.0 ? cfg.ph_c
                                                              : loss::default_ph_c(data_dim));
        case loss::LossMapKind::hpf:
            return loss::LossMap::hpf(cfg.hpf_lambda, data_dim, cfg.blur);
    }
    return loss::LossMap::mse();
}

TrainResult train(nn::Denoiser& d, CouplingSource& source, const TrainConfig& cfg, Rng& rng,
                  const std::function<void(std::size_t, const TrainLogRow&)>& on_log) {
    if (source.dim() != d.data_dim()) {
        throw shape_error("train: source dimension does not match the model");
    }
    Rng rng_init = rng.split(0xA1);
    Rng rng_batch = rng.split(0xA2);
    Rng rng_time = rng.split(0xA3);
    Rng rng_drop = rng.split(0xA4);

    loss::WeightRule rule = make_weight_rule(cfg.weight, d.data_dim(), rng_init);
    loss::LossMap map = make_loss_map(cfg.loss_map, d.data_dim());

    std::vector<ad::Var> params = d.params();
    for (auto& p : rule.trainable_params()) params.push_back(p);
    nn::Adam adam(cfg.opt, params);

    TrainResult result;
    Tensor x0, x1;
    const double lr0 = cfg.opt.lr;
    const double lr1 = cfg.opt.lr * cfg.lr_final_frac;

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        if (cfg.lr_final_frac < 1.0 && cfg.steps > 1) {
            const double u = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
            adam.lr() = lr1 + 0.5 * (lr0 - lr1) * (1.0 + std::cos(M_PI * u));
        }
        source.sample_batch(cfg.batch, rng_batch, x0, x1);
        Tensor t = loss::sample_times(cfg.time_dist, cfg.batch, rng_time, cfg.t_min, cfg.t_max);
        loss::BatchLossResult batch =
            loss::weighted_batch_loss(d, x0, x1, t, rule, map, true, rng_drop);
        if (!std::isfinite(batch.objective.value()[0])) {
            throw numeric_error("train: non-finite objective at step " + std::to_string(step));
        }
        ad::backward(batch.objective);
        adam.step();

        if (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            TrainLogRow row{step, batch.objective.value()[0], batch.weighted_loss,
                            batch.raw_loss, adam.lr()};
            result.log.push_back(row);
            if (on_log) on_log(step, row);
        }
        result.final_raw_loss = batch.raw_loss;
    }
    result.skipped_steps = adam.skipped();
    // The EMA vector tracks all optimized tensors; the denoiser's come
    // first, ahead of any tracker-net parameters.
    result.ema.assign(adam.ema().begin(), adam.ema().begin() + d.params().size());
    return result;
}

ReflowRoundResult reflow_round(const nn::Denoiser& teacher, const data::DataSampler& dataset,
                               const ReflowRoundConfig& cfg, Rng& rng) {
    Rng rng_pairs = rng.split(0xB1);
    Rng rng_train = rng.split(0xB2);
    Rng rng_init = rng.split(0xB3);
    Rng rng_ref = rng.split(0xB4);

    ode::DenoiserVelocity field(teacher);
    coupling::PairGenResult backward =
        coupling::generate_backward_pairs(field, cfg.n_backward_pairs, cfg.pair_solver,
                                          rng_pairs);
    ReflowRoundResult out{nn::Denoiser(teacher.config(), rng_init), std::move(backward.store),
                          backward.dropped, {}};
    out.pairs.teacher_hash = teacher.param_hash();

    if (cfg.n_forward_pairs > 0) {
        Tensor points = dataset.sample(cfg.n_forward_pairs, rng_pairs);
        coupling::PairGenResult forward =
            coupling::generate_forward_pairs(field, points, cfg.pair_solver);
        out.pairs.forward_x0 = std::move(forward.store.forward_x0);
        out.pairs.forward_x1 = std::move(forward.store.forward_x1);
        out.dropped_pairs += forward.dropped;
        out.pairs.rho = cfg.rho;
    } else {
        out.pairs.rho = 0.0;
    }

    if (cfg.project) {
        const std::size_t n_ref = std::max<std::size_t>(out.pairs.n_backward(), 256);
        Tensor data_ref = dataset.sample(std::min<std::size_t>(n_ref, 2048), rng_ref);
        coupling::ProjectionResult proj =
            coupling::project_coupling(out.pairs, data_ref, cfg.projection);
        out.pairs.backward_x0 = std::move(proj.store.backward_x0);
    }

    if (cfg.init_from_teacher) out.student.copy_params_from(teacher);
    if (cfg.train.steps > 0) {
        PairStoreSource source(out.pairs);
        out.train_result = train(out.student, source, cfg.train, rng_train);
    }
    return out;
}

}  // namespace flowlab::train
