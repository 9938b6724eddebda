#include "flowlab/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowlab/error.hpp"

namespace flowlab::coupling {

namespace {

Tensor squared_cost(const Tensor& x0, const Tensor& x1) {
    const std::size_t b = x0.rows(), d = x0.cols();
    Tensor c({b, b});
    for (std::size_t i = 0; i < b; ++i) {
        const double* xi = x0.data() + i * d;
        for (std::size_t j = 0; j < b; ++j) {
            const double* yj = x1.data() + j * d;
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xi[k] - yj[k];
                ss += diff * diff;
            }
            c[i * b + j] = ss;
        }
    }
    return c;
}

}  // namespace

double SinkhornPlan::marginal_violation() const {
    const std::size_t b = size();
    if (b == 0) return 0.0;
    const double target = 1.0 / static_cast<double>(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b; ++j) row += p[i * b + j];
        worst = std::max(worst, std::abs(row - target));
    }
    for (std::size_t j = 0; j < b; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < b; ++i) col += p[i * b + j];
        worst = std::max(worst, std::abs(col - target));
    }
    return worst;
}

double SinkhornPlan::plan_cost(const Tensor& x0, const Tensor& x1) const {
    const std::size_t b = size(), d = x0.cols();
    double acc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = x0[i * d + k] - x1[j * d + k];
                ss += diff * diff;
            }
            acc += p[i * b + j] * ss;
        }
    }
    return acc;
}

SinkhornPlan sinkhorn_coupling(const Tensor& x0, const Tensor& x1, double eps,
                               std::size_t max_iter, SinkhornAccel accel, double tol) {
    if (x0.rank() != 2 || x1.rank() != 2 || x0.rows() != x1.rows() ||
        x0.cols() != x1.cols()) {
        throw shape_error("sinkhorn: batches must be equal-size [b, d]");
    }
    if (eps <= 0.0) throw config_error("sinkhorn: eps must be positive");
    const std::size_t b = x0.rows();
    if (b == 0) throw error("sinkhorn: empty batch");

    const Tensor cost = squared_cost(x0, x1);
    const double log_marginal = std::log(1.0 / static_cast<double>(b));

    SinkhornPlan plan;
    plan.eps = eps;
    plan.f.assign(b, 0.0);
    plan.g.assign(b, 0.0);
    if (accel.warm_start) {
        if (accel.warm_start->f.size() != b) {
            throw config_error("sinkhorn: warm-start potentials have the wrong size");
        }
        plan.f = accel.warm_start->f;
        plan.g = accel.warm_start->g;
    }

    double eps_ratio = 1.0;
    double eps_now = eps;
    if (accel.eps_decay_start && *accel.eps_decay_start > eps) {
        eps_now = *accel.eps_decay_start;
        eps_ratio = std::pow(eps / eps_now, 1.0 / static_cast<double>(
                                                    std::max<std::size_t>(accel.decay_iters, 1)));
    }

    std::vector<double> scratch(b);
    auto lse_row = [&](std::size_t i, double e) {
        // log sum_j exp((g_j - C_ij) / e)
        double mx = -1e300;
        for (std::size_t j = 0; j < b; ++j) {
            scratch[j] = (plan.g[j] - cost[i * b + j]) / e;
            mx = std::max(mx, scratch[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += std::exp(scratch[j] - mx);
        return mx + std::log(s);
    };
    auto lse_col = [&](std::size_t j, double e) {
        double mx = -1e300;
        for (std::size_t i = 0; i < b; ++i) {
            scratch[i] = (plan.f[i] - cost[i * b + j]) / e;
            mx = std::max(mx, scratch[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < b; ++i) s += std::exp(scratch[i] - mx);
        return mx + std::log(s);
    };

    auto build_plan = [&](double e) {
        plan.p = Tensor({b, b});
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < b; ++j) {
                plan.p[i * b + j] = std::exp((plan.f[i] + plan.g[j] - cost[i * b + j]) / e);
            }
        }
    };

    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < b; ++i) plan.f[i] = eps_now * (log_marginal - lse_row(i, eps_now));
        for (std::size_t j = 0; j < b; ++j) plan.g[j] = eps_now * (log_marginal - lse_col(j, eps_now));
        plan.iterations = it + 1;
        if (eps_now > eps) {
            eps_now = std::max(eps, eps_now * eps_ratio);
            continue;  // keep annealing before testing convergence
        }
        // After the g-update columns are tight; rows measure convergence.
        build_plan(eps_now);
        const double viol = plan.marginal_violation();
        if (viol < tol) {
            plan.max_violation = viol;
            plan.converged = true;
            return plan;
        }
    }
    if (plan.p.size() == 0) build_plan(eps_now);
    plan.max_violation = plan.marginal_violation();
    plan.converged = plan.max_violation < tol;
    return plan;
}

void subsample_plan(const SinkhornPlan& plan, const Tensor& x0, const Tensor& x1,
                    std::size_t b_loss, Rng& rng, Tensor& x0_out, Tensor& x1_out) {
    const std::size_t b = plan.size();
    if (b == 0) throw error("subsample_plan: empty plan");
    if (b_loss > b) throw error("subsample_plan: b_loss must be <= b_coupling");
    if (x0.rows() != b || x1.rows() != b) {
        throw shape_error("subsample_plan: batch size does not match plan");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < plan.p.size(); ++i) total += plan.p[i];
    if (std::abs(total - 1.0) > 1e-6) {
        throw numeric_error("subsample_plan: plan mass is not normalized");
    }
    std::vector<double> cdf(plan.p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < plan.p.size(); ++i) {
        acc += plan.p[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    const std::size_t d = x0.cols();
    x0_out = Tensor({b_loss, d});
    x1_out = Tensor({b_loss, d});
    for (std::size_t s = 0; s < b_loss; ++s) {
        const double u = rng.uniform();
        const std::size_t flat = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const std::size_t i = flat / b, j = flat % b;
        for (std::size_t k = 0; k < d; ++k) {
            x0_out[s * d + k] = x0[i * d + k];
            x1_out[s * d + k] = x1[j * d + k];
        }
    }
}

double exact_assignment_cost(const Tensor& x0, const Tensor& x1) {
    const std::size_t n = x0.rows(), d = x0.cols();
    if (n == 0 || n > 8) throw error("exact_assignment_cost: supported for 1 <= n <= 8");
    if (x1.rows() != n || x1.cols() != d) throw shape_error("exact_assignment_cost: shapes");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = x0[i * d + k] - x1[perm[i] * d + k];
                acc += diff * diff;
            }
        }
        best = std::min(best, acc / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace flowlab::coupling
