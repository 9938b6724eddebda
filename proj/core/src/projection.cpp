#include "flowlab/projection.hpp"

#include <cmath>

#include "flowlab/error.hpp"
#include "flowlab/metrics.hpp"

namespace flowlab::coupling {

namespace {

// d/da_i of the U-statistic energy distance between A and a fixed B.
void energy_distance_grad(const Tensor& a, const Tensor& b, Tensor& grad) {
    const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
    grad.set_zero();
    const double cross_w = 2.0 / (static_cast<double>(n) * static_cast<double>(m));
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * d;
        double* gi = grad.data() + i * d;
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.data() + j * d;
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - bj[k];
                ss += diff * diff;
            }
            const double dist = std::sqrt(ss);
            if (dist < 1e-12) continue;
            for (std::size_t k = 0; k < d; ++k) gi[k] += cross_w * (ai[k] - bj[k]) / dist;
        }
    }
    if (n < 2) return;
    const double within_w = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * d;
        double* gi = grad.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* aj = a.data() + j * d;
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - aj[k];
                ss += diff * diff;
            }
            const double dist = std::sqrt(ss);
            if (dist < 1e-12) continue;
            // Both occurrences of i in the symmetric sum.
            for (std::size_t k = 0; k < d; ++k) gi[k] -= within_w * (ai[k] - aj[k]) / dist;
        }
    }
}

Tensor join_pairs(const Tensor& x0, const Tensor& x1) {
    const std::size_t n = x0.rows(), d = x0.cols();
    Tensor out({n, 2 * d});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            out[i * 2 * d + k] = x0[i * d + k];
            out[i * 2 * d + d + k] = x1[i * d + k];
        }
    }
    return out;
}

// Envelope gradient of sum_ij P_ij |g_i - q_j|^2 w.r.t. g_i at fixed P.
void plan_grad(const SinkhornPlan& plan, const Tensor& g, const Tensor& q, Tensor& grad,
               double scale) {
    const std::size_t n = g.rows(), d = g.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* gi = g.data() + i * d;
        double* out = grad.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = plan.p[i * n + j];
            if (pij == 0.0) continue;
            const double* qj = q.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) {
                out[k] += scale * pij * 2.0 * (gi[k] - qj[k]);
            }
        }
    }
}

}  // namespace

double sinkhorn_divergence(const Tensor& a, const Tensor& b, double eps, std::size_t max_iter) {
    SinkhornPlan ab = sinkhorn_coupling(a, b, eps, max_iter);
    SinkhornPlan aa = sinkhorn_coupling(a, a, eps, max_iter);
    SinkhornPlan bb = sinkhorn_coupling(b, b, eps, max_iter);
    return ab.plan_cost(a, b) - 0.5 * aa.plan_cost(a, a) - 0.5 * bb.plan_cost(b, b);
}

ProjectionResult project_coupling(const PairStore& store, const Tensor& data_ref,
                                  const ProjectionConfig& cfg) {
    store.validate();
    const std::size_t n = store.n_backward();
    if (n == 0) throw error("project_coupling: store has no backward pairs");
    if (data_ref.rows() == 0 || data_ref.cols() != store.dim()) {
        throw shape_error("project_coupling: bad reference sample");
    }
    const std::size_t d = store.dim();

    double eps = cfg.skd_eps;
    if (eps <= 0.0) {
        const double diam = data::data_diameter(data_ref);
        eps = 0.1 * diam * diam;
        if (eps <= 0.0) eps = 1e-3;
    }

    const Tensor q = join_pairs(store.backward_x0, store.backward_x1);
    Tensor x0 = store.backward_x0;            // free variables
    const Tensor x1 = store.backward_x1;      // frozen

    ProjectionResult res;
    res.store = store;

    SinkhornPlan plan_gq, plan_gg;  // warm-started across steps
    bool have_plans = false;

    Tensor ed_grad({n, d});
    Tensor joint_grad({n, 2 * d});

    double lambda = cfg.lambda_start;
    double prev_marginal = metrics::energy_distance(x0, data_ref);
    std::size_t rising = 0;

    for (std::size_t phase = 0; phase < cfg.max_phases; ++phase) {
        const double lr = cfg.lr / (1.0 + lambda);
        for (std::size_t it = 0; it < cfg.phase_iters; ++it) {
            Tensor g = join_pairs(x0, x1);
            SinkhornAccel accel;
            if (have_plans) accel.warm_start = &plan_gq;
            plan_gq = sinkhorn_coupling(g, q, eps, cfg.sinkhorn_max_iter, accel);
            SinkhornAccel accel_gg;
            if (have_plans) accel_gg.warm_start = &plan_gg;
            plan_gg = sinkhorn_coupling(g, g, eps, cfg.sinkhorn_max_iter, accel_gg);
            have_plans = true;

            // grad of OT(g, q) - 1/2 OT(g, g); OT(q, q) is constant here.
            joint_grad.set_zero();
            plan_grad(plan_gq, g, q, joint_grad, 1.0);
            // Both arguments of OT(g, g) move: the symmetric envelope
            // contributes twice the one-sided term, halved by the 1/2.
            plan_grad(plan_gg, g, g, joint_grad, -1.0);

            energy_distance_grad(x0, data_ref, ed_grad);
            // Both objective terms carry 1/n per-point weights; scale by n
            // so the step size is independent of the store size.
            const double scale = static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < d; ++k) {
                    // Only the x0 half of the joint gradient applies.
                    const double gsum =
                        ed_grad[i * d + k] + lambda * joint_grad[i * 2 * d + k];
                    x0[i * d + k] -= lr * scale * gsum;
                }
            }
        }

        const double marginal = metrics::energy_distance(x0, data_ref);
        const double skd =
            plan_gq.plan_cost(join_pairs(x0, x1), q) -
            0.5 * plan_gg.plan_cost(join_pairs(x0, x1), join_pairs(x0, x1));
        res.lambda_history.push_back(lambda);
        res.marginal_history.push_back(marginal);
        res.skd_history.push_back(skd);
        res.phases = phase + 1;

        if (marginal > prev_marginal) {
            ++rising;
            if (rising >= cfg.divergence_patience) {
                res.aborted = true;
                break;
            }
        } else {
            rising = 0;
        }
        const double improvement = (prev_marginal - marginal) / std::max(prev_marginal, 1e-12);
        const bool saturated = improvement < cfg.saturation_tol;
        prev_marginal = marginal;
        if (saturated && phase > 0) break;
        lambda *= cfg.lambda_decay;
    }

    double disp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = x0[i * d + k] - store.backward_x0[i * d + k];
            ss += diff * diff;
        }
        disp += std::sqrt(ss);
    }
    res.mean_displacement = disp / static_cast<double>(n);
    res.store.backward_x0 = std::move(x0);
    return res;
}

}  // namespace flowlab::coupling
