#include <doctest.h>

#include <cmath>

#include "flowlab/error.hpp"
#include "flowlab/trainer.hpp"

using namespace flowlab;
using namespace flowlab::train;

namespace {

nn::DenoiserConfig tiny_model() {
    nn::DenoiserConfig cfg;
    cfg.data_dim = 2;
    cfg.hidden = {24, 24};
    cfg.time_embed = nn::TimeEmbedding{4, 16.0};
    return cfg;
}

TrainConfig quick_train(std::size_t steps) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch = 64;
    cfg.opt.lr = 2e-3;
    cfg.opt.ema_decay = 0.99;
    cfg.log_every = 50;
    return cfg;
}

}  // namespace

TEST_CASE("training reduces the chord-regression loss on an easy problem") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    IndependentSource source(mix);
    Rng rng(121);
    nn::Denoiser model(tiny_model(), rng);
    Rng rng_train(122);
    TrainResult res = train::train(model, source, quick_train(600), rng_train);
    REQUIRE(res.log.size() >= 2);
    CHECK(res.log.back().raw_loss < 0.5 * res.log.front().raw_loss);
    CHECK(res.skipped_steps == 0);
}

TEST_CASE("the same seed reproduces the same trained parameters") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    IndependentSource source(mix);
    auto run = [&] {
        Rng rng(321);
        nn::Denoiser model(tiny_model(), rng);
        Rng rng_train(322);
        train::train(model, source, quick_train(120), rng_train);
        return model.param_hash();
    };
    CHECK(run() == run());
}

TEST_CASE("a reflow round with zero steps returns the teacher parameters unchanged") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    Rng rng(123);
    nn::Denoiser teacher(tiny_model(), rng);
    ReflowRoundConfig cfg;
    cfg.n_backward_pairs = 64;
    cfg.pair_solver.method = ode::Method::heun;
    cfg.pair_solver.schedule = ode::Schedule::uniform(8);
    cfg.train = quick_train(0);
    Rng rng_round(124);
    ReflowRoundResult res = reflow_round(teacher, mix, cfg, rng_round);
    CHECK(res.student.param_hash() == teacher.param_hash());
    CHECK(res.pairs.n_backward() == 64);
    CHECK(res.pairs.teacher_hash == teacher.param_hash());
}

TEST_CASE("reflow rounds mix forward pairs when requested") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    Rng rng(125);
    nn::Denoiser teacher(tiny_model(), rng);
    ReflowRoundConfig cfg;
    cfg.n_backward_pairs = 32;
    cfg.n_forward_pairs = 16;
    cfg.rho = 0.4;
    cfg.pair_solver.method = ode::Method::heun;
    cfg.pair_solver.schedule = ode::Schedule::uniform(8);
    cfg.train = quick_train(10);
    Rng rng_round(126);
    ReflowRoundResult res = reflow_round(teacher, mix, cfg, rng_round);
    CHECK(res.pairs.n_forward() == 16);
    CHECK(res.pairs.rho == 0.4);
}

TEST_CASE("mini-batch OT source produces aligned batches from a fresh plan") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    MinibatchOtSource source(mix, 32, 2.0, 2000, true, 10.0);
    Rng rng(127);
    Tensor x0, x1;
    source.sample_batch(16, rng, x0, x1);
    CHECK(x0.rows() == 16);
    CHECK(x1.rows() == 16);
    CHECK(source.plans_solved() == 1);
    source.sample_batch(16, rng, x0, x1);
    CHECK(source.plans_solved() == 2);
    CHECK_THROWS_AS(source.sample_batch(64, rng, x0, x1), config_error);
}

TEST_CASE("training with every weight rule stays finite") {
    data::GaussianMixture mix = data::two_gaussians(3.0, 0.3);
    IndependentSource source(mix);
    for (loss::WeightKind kind :
         {loss::WeightKind::one, loss::WeightKind::inv_t, loss::WeightKind::inv_t2,
          loss::WeightKind::edm, loss::WeightKind::batch_norm, loss::WeightKind::tracker}) {
        Rng rng(128);
        nn::Denoiser model(tiny_model(), rng);
        TrainConfig cfg = quick_train(60);
        cfg.weight.kind = kind;
        cfg.weight.tracker_hidden = 8;
        Rng rng_train(129);
        CAPTURE(loss::weight_kind_name(kind));
        TrainResult res = train::train(model, source, cfg, rng_train);
        CHECK(std::isfinite(res.final_raw_loss));
        CHECK(res.skipped_steps == 0);
    }
}
