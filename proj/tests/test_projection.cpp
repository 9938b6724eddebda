#include <doctest.h>

#include <cmath>

#include "flowlab/metrics.hpp"
#include "flowlab/projection.hpp"

using namespace flowlab;
using namespace flowlab::coupling;

namespace {

PairStore make_store(const Tensor& x0, const Tensor& x1) {
    PairStore store;
    store.backward_x0 = x0;
    store.backward_x1 = x1;
    store.rho = 0.0;
    return store;
}

}  // namespace

TEST_CASE("a coupling already on the reference support barely moves") {
    Rng rng(111);
    const std::size_t n = 128;
    Tensor x0({n, 2}), x1({n, 2});
    for (std::size_t i = 0; i < x0.size(); ++i) {
        x0[i] = rng.normal();
        x1[i] = rng.normal();
    }
    PairStore store = make_store(x0, x1);

    ProjectionConfig cfg;
    cfg.lambda_start = 100.0;
    cfg.max_phases = 2;
    cfg.phase_iters = 30;
    // Reference = the x0 points themselves: discrepancy starts at zero.
    ProjectionResult res = project_coupling(store, x0, cfg);
    CHECK(res.mean_displacement < 1e-3);
}

TEST_CASE("a huge coupling penalty freezes the points") {
    Rng rng(112);
    const std::size_t n = 96;
    Tensor x0({n, 1}), x1({n, 1}), ref({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        x0[i] = rng.normal() + 1.0;  // off the reference marginal
        x1[i] = rng.normal();
        ref[i] = rng.normal();
    }
    PairStore store = make_store(x0, x1);
    ProjectionConfig cfg;
    cfg.lambda_start = 1e6;
    cfg.max_phases = 1;
    cfg.phase_iters = 50;
    ProjectionResult res = project_coupling(store, ref, cfg);
    CHECK(res.mean_displacement < 1e-3);
}

TEST_CASE("projection repairs a shifted 1-D marginal without tearing pairs apart") {
    Rng rng(113);
    const std::size_t n = 256;
    const double delta = 0.5;
    Tensor ref({n, 1}), x0({n, 1}), x1({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        ref[i] = rng.normal();
        x0[i] = rng.normal() + delta;  // marginal shifted by delta
        x1[i] = rng.normal();
    }
    PairStore store = make_store(x0, x1);

    const double before = metrics::energy_distance(x0, ref);
    ProjectionConfig cfg;
    cfg.lambda_start = 10.0;
    cfg.lambda_decay = 0.1;
    cfg.max_phases = 4;
    cfg.phase_iters = 60;
    cfg.lr = 0.3;
    cfg.saturation_tol = 0.0;  // run all phases for a clean comparison
    ProjectionResult res = project_coupling(store, ref, cfg);
    const double after = metrics::energy_distance(res.store.backward_x0, ref);

    CHECK(after < 0.5 * before);
    // Per-pair movement stays on the order of the shift.
    CHECK(res.mean_displacement <= 2.0 * delta);
    // The noise side is untouched, bit for bit.
    for (std::size_t i = 0; i < n; ++i) CHECK(res.store.backward_x1[i] == x1[i]);
}

TEST_CASE("projection rejects an empty or mismatched store") {
    PairStore empty;
    Tensor ref({4, 1});
    CHECK_THROWS(project_coupling(empty, ref, ProjectionConfig{}));

    Rng rng(114);
    Tensor x0({8, 2}), x1({8, 2});
    for (std::size_t i = 0; i < x0.size(); ++i) {
        x0[i] = rng.normal();
        x1[i] = rng.normal();
    }
    PairStore store = make_store(x0, x1);
    Tensor bad_ref({4, 3});
    CHECK_THROWS(project_coupling(store, bad_ref, ProjectionConfig{}));
}

TEST_CASE("sinkhorn divergence is near zero on identical clouds and positive off them") {
    Rng rng(115);
    const std::size_t n = 64;
    Tensor a({n, 2}), b({n, 2});
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal() + 1.5;
    }
    const double self = sinkhorn_divergence(a, a, 0.5);
    const double cross = sinkhorn_divergence(a, b, 0.5);
    CHECK(std::abs(self) < 1e-8);
    CHECK(cross > 0.1);
}
