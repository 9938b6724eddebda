#include "flowlab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/dataset.hpp"
#include "flowlab/error.hpp"

namespace flowlab::metrics {

TrajectoryBatch simulate_trajectories(const ode::VelocityField& field, std::size_t n_traj,
                                      std::size_t fine_n, Rng& rng) {
    if (fine_n < 32) throw config_error("straightness: fine grid needs at least 32 steps");
    Tensor x1 = data::sample_noise(n_traj, field.dim(), rng);

    ode::SolverCfg cfg;
    cfg.method = ode::Method::heun;
    cfg.schedule = ode::Schedule::uniform(fine_n);
    cfg.forward = false;
    cfg.record_trajectory = true;
    ode::SolveResult res = ode::solve(x1, field, cfg);

    TrajectoryBatch out;
    // solve() traverses 1 -> 0; store ascending in t.
    out.times.assign(res.times.rbegin(), res.times.rend());
    out.states.assign(res.trajectory.rbegin(), res.trajectory.rend());
    out.x0 = res.terminal;
    out.x1 = std::move(x1);
    return out;
}

double straightness(const ode::VelocityField& field, const TrajectoryBatch& traj) {
    const std::size_t n_knots = traj.times.size();
    if (n_knots < 2) throw error("straightness: trajectory too short");
    const std::size_t m = traj.x0.rows(), d = traj.x0.cols();

    // Chord per trajectory.
    Tensor chord({m, d});
    for (std::size_t i = 0; i < chord.size(); ++i) chord[i] = traj.x1[i] - traj.x0[i];

    std::vector<double> integrand(n_knots, 0.0);
    Tensor v({m, d});
    for (std::size_t k = 0; k < n_knots; ++k) {
        field.eval(traj.states[k], traj.times[k], v);
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double ss = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = chord[i * d + j] - v[i * d + j];
                ss += diff * diff;
            }
            acc += std::sqrt(ss);
        }
        integrand[k] = acc / static_cast<double>(m);
    }

    double s = 0.0;
    for (std::size_t k = 0; k + 1 < n_knots; ++k) {
        const double h = traj.times[k + 1] - traj.times[k];
        s += 0.5 * h * (integrand[k] + integrand[k + 1]);
    }
    return s;
}

double straightness(const ode::VelocityField& field, std::size_t n_traj, std::size_t fine_n,
                    Rng& rng) {
    return straightness(field, simulate_trajectories(field, n_traj, fine_n, rng));
}

double transport_cost(const Tensor& x0, const Tensor& x1) {
    check_same_shape(x0, x1, "transport_cost");
    const std::size_t m = x0.rows(), d = x0.cols();
    if (m == 0) throw error("transport_cost: empty pairs");
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x0[i * d + j] - x1[i * d + j];
            acc += diff * diff;
        }
    }
    return acc / static_cast<double>(m);
}

namespace {

double mean_cross_distance(const Tensor& a, const Tensor& b) {
    const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * d;
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.data() + j * d;
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - bj[k];
                ss += diff * diff;
            }
            acc += std::sqrt(ss);
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(m));
}

double mean_within_distance(const Tensor& a) {
    const std::size_t n = a.rows(), d = a.cols();
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * d;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* aj = a.data() + j * d;
            double ss = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - aj[k];
                ss += diff * diff;
            }
            acc += std::sqrt(ss);
        }
    }
    // U-statistic: i != j pairs.
    return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

double energy_distance(const Tensor& a, const Tensor& b) {
    if (a.rows() == 0 || b.rows() == 0) throw error("energy_distance: empty sample");
    if (a.cols() != b.cols()) throw shape_error("energy_distance: dimension mismatch");
    const double v = 2.0 * mean_cross_distance(a, b) - mean_within_distance(a) -
                     mean_within_distance(b);
    return std::max(v, 0.0);
}

Tensor posterior_mean_oracle(const Tensor& x0, const Tensor& x1, const Tensor& x_t_query,
                             double t, double bandwidth) {
    check_same_shape(x0, x1, "posterior_mean_oracle");
    const std::size_t n = x0.rows(), d = x0.cols();
    if (n == 0) throw error("posterior_mean_oracle: empty coupling");
    if (n > 10000) throw error("posterior_mean_oracle: coupling too large");
    if (t <= 0.0 || t >= 1.0) {
        throw numeric_error("posterior_mean_oracle: t must lie in (0, 1)");
    }
    if (x_t_query.rank() != 1 || x_t_query.size() != d) {
        throw shape_error("posterior_mean_oracle: query must be a d-vector");
    }
    double h = bandwidth;
    if (h <= 0.0) h = 0.01 * data::data_diameter(x0);
    if (h <= 0.0) h = 1e-8;

    // Log-domain kernel weights around each pair's interpolation point.
    std::vector<double> logw(n);
    double max_logw = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double xt_i = (1.0 - t) * x0[i * d + j] + t * x1[i * d + j];
            const double diff = x_t_query[j] - xt_i;
            ss += diff * diff;
        }
        logw[i] = -0.5 * ss / (h * h);
        max_logw = std::max(max_logw, logw[i]);
    }
    if (max_logw < -700.0) {
        throw numeric_error("posterior_mean_oracle: probe point too far, all weights underflow");
    }

    Tensor out({d});
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(logw[i] - max_logw);
        wsum += w;
        for (std::size_t j = 0; j < d; ++j) out[j] += w * x0[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) out[j] /= wsum;
    return out;
}

double time_to_sigma(double t) {
    if (t < 0.0 || t >= 1.0) {
        throw numeric_error("time_to_sigma: t must lie in [0, 1)");
    }
    return t / (1.0 - t);
}

double sigma_to_time(double sigma) {
    if (sigma < 0.0) throw numeric_error("sigma_to_time: sigma must be >= 0");
    return sigma / (1.0 + sigma);
}

std::pair<Tensor, double> to_noise_coords(const Tensor& x, double t) {
    const double sigma = time_to_sigma(t);
    Tensor y = x;
    const double scale = 1.0 / (1.0 - t);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= scale;
    return {std::move(y), sigma};
}

std::pair<Tensor, double> from_noise_coords(const Tensor& y, double sigma) {
    const double t = sigma_to_time(sigma);
    Tensor x = y;
    const double scale = 1.0 / (1.0 + sigma);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= scale;
    return {std::move(x), t};
}

}  // namespace flowlab::metrics
