#include "flowlab/solver.hpp"

#include <cmath>

#include "flowlab/error.hpp"
#include "flowlab/losses.hpp"

namespace flowlab::ode {

DenoiserVelocity::DenoiserVelocity(const nn::Denoiser& d, const Tensor* label)
    : d_(d), label_(label) {}

std::size_t DenoiserVelocity::dim() const {
    return d_.data_dim();
}

void DenoiserVelocity::eval(const Tensor& x, double t, Tensor& out) const {
    // Clamp once, used both in the net input and the 1/t factor, so the
    // field is constant in t below the floor.
    const double tc = std::max(t, nn::kVelocityTimeFloor);
    Tensor tv = Tensor::full({x.rows()}, tc);
    out = nn::velocity_from_denoised(x, d_.denoise(x, tv, label_), tv);
}

void ConstantField::eval(const Tensor& x, double, Tensor& out) const {
    const std::size_t m = x.rows(), d = x.cols();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = c_[j];
    }
}

GuidedField::GuidedField(const VelocityField& main, const VelocityField& aux, double scale)
    : main_(main), aux_(aux), scale_(scale) {
    if (main.dim() != aux.dim()) {
        throw shape_error("guided field: dimension mismatch between main and auxiliary nets");
    }
}

void GuidedField::eval(const Tensor& x, double t, Tensor& out) const {
    main_.eval(x, t, out);
    if (scale_ == 0.0) return;
    Tensor aux(x.shape());
    aux_.eval(x, t, aux);
    const double g = scale_;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 + g) * out[i] - g * aux[i];
    }
}

AutoguidancePair::AutoguidancePair(const nn::Denoiser& main, const nn::Denoiser& degraded,
                                   double scale)
    : main_velocity(main),
      degraded_velocity(degraded),
      field(main_velocity, degraded_velocity, scale) {
    if (main.data_dim() != degraded.data_dim()) {
        throw shape_error("autoguidance: main and degraded nets have different dimensions");
    }
}

const char* method_name(Method m) {
    switch (m) {
        case Method::euler: return "euler";
        case Method::heun: return "heun";
        case Method::dpm: return "dpm";
    }
    return "heun";
}

Method method_from_name(const std::string& name) {
    if (name == "euler") return Method::euler;
    if (name == "heun") return Method::heun;
    if (name == "dpm") return Method::dpm;
    throw config_error("unknown solver method: " + name);
}

void SolverCfg::validate() const {
    schedule.validate();
    if (method == Method::dpm && (dpm_r <= 0.0 || dpm_r > 1.0)) {
        throw config_error("solver: dpm r must lie in (0, 1]");
    }
    if (t_floor <= 0.0) throw config_error("solver: t_floor must be positive");
}

namespace {

void mark_nonfinite(const Tensor& x, std::vector<std::uint8_t>& finite, std::size_t& bad,
                    bool throw_on_nonfinite, std::size_t step_index) {
    const std::size_t m = x.rows(), d = x.cols();
    for (std::size_t i = 0; i < m; ++i) {
        if (!finite[i]) continue;
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(x[i * d + j])) {
                finite[i] = 0;
                ++bad;
                if (throw_on_nonfinite) {
                    throw numeric_error("solve: non-finite state at step " +
                                        std::to_string(step_index));
                }
                break;
            }
        }
    }
}

}  // namespace

struct SolveOptions {
    bool throw_on_nonfinite = true;
};

static SolveResult solve_impl(const Tensor& x_init, const VelocityField& field,
                              const SolverCfg& cfg, const SolveOptions& opt) {
    cfg.validate();
    if (x_init.rank() != 2 || x_init.cols() != field.dim()) {
        throw shape_error("solve: x_init must be [batch, " + std::to_string(field.dim()) + "]");
    }
    check_finite(x_init, "solve: x_init");

    const auto& grid = cfg.schedule.grid;
    const std::size_t n_steps = cfg.schedule.steps;
    const std::size_t m = x_init.rows(), d = x_init.cols();

    SolveResult res;
    res.finite.assign(m, 1);
    Tensor x = x_init;
    Tensor v1({m, d}), v2({m, d}), stage({m, d});

    auto record = [&](double t) {
        res.times.push_back(t);
        if (cfg.record_trajectory) res.trajectory.push_back(x);
    };

    const double t_start = cfg.forward ? grid.front() : grid.back();
    record(t_start);

    for (std::size_t k = 0; k < n_steps; ++k) {
        double t_from, t_to;
        if (cfg.forward) {
            t_from = grid[k];
            t_to = grid[k + 1];
        } else {
            t_from = grid[n_steps - k];
            t_to = grid[n_steps - k - 1];
        }
        const double h = t_to - t_from;
        const bool last_toward_zero = !cfg.forward && (k + 1 == n_steps);
        const bool euler_step =
            cfg.method == Method::euler || (cfg.final_step_euler && last_toward_zero);

        field.eval(x, t_from, v1);
        ++res.nfe;

        if (euler_step) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * v1[i];
        } else if (cfg.method == Method::heun) {
            for (std::size_t i = 0; i < x.size(); ++i) stage[i] = x[i] + h * v1[i];
            field.eval(stage, t_to, v2);
            ++res.nfe;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = x[i] + h * (0.5 * v2[i] + 0.5 * v1[i]);
            }
        } else {
            // Single-step second-order update with intermediate time
            // s = t_to^r t_from^(1-r); the combination recovers the Heun
            // update at r = 1, where s = t_to and no flooring applies.
            const double r = cfg.dpm_r;
            double s = std::pow(t_to, r) * std::pow(t_from, 1.0 - r);
            if (r < 1.0 && s < cfg.t_floor) s = cfg.t_floor;
            const double c1 = 1.0 / (2.0 * r);
            const double c2 = 1.0 - c1;
            for (std::size_t i = 0; i < x.size(); ++i) stage[i] = x[i] + (s - t_from) * v1[i];
            field.eval(stage, s, v2);
            ++res.nfe;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = x[i] + h * (c1 * v2[i] + c2 * v1[i]);
            }
        }
        mark_nonfinite(x, res.finite, res.n_nonfinite, opt.throw_on_nonfinite, k);
        record(t_to);
    }

    res.terminal = std::move(x);
    return res;
}

SolveResult solve(const Tensor& x_init, const VelocityField& field, const SolverCfg& cfg) {
    return solve_impl(x_init, field, cfg, SolveOptions{});
}

SolveResult solve_flagging_nonfinite(const Tensor& x_init, const VelocityField& field,
                                     const SolverCfg& cfg) {
    SolveOptions opt;
    opt.throw_on_nonfinite = false;
    return solve_impl(x_init, field, cfg, opt);
}

std::size_t expected_nfe(const SolverCfg& cfg) {
    const std::size_t n = cfg.schedule.steps;
    if (cfg.method == Method::euler) return n;
    const bool economy = cfg.final_step_euler && !cfg.forward;
    return 2 * n - (economy ? 1 : 0);
}

std::vector<double> truncation_error(const VelocityField& field, const Schedule& schedule,
                                     const Tensor& x0, const Tensor& x1,
                                     std::size_t ref_substeps) {
    schedule.validate();
    if (ref_substeps < 64) {
        throw config_error("truncation_error: reference needs at least 64 sub-steps");
    }
    check_same_shape(x0, x1, "truncation_error");
    const std::size_t n = schedule.steps;
    const std::size_t m = x0.rows(), d = x0.cols();

    std::vector<double> out(n, 0.0);
    Tensor v({m, d}), v1({m, d}), v2({m, d}), stage({m, d});

    for (std::size_t i = 0; i < n; ++i) {
        const double t_hi = schedule.grid[i + 1];
        const double t_lo = schedule.grid[i];
        Tensor t_col = Tensor::full({m}, t_hi);
        Tensor x_hi = loss::interpolate(x0, x1, t_col);

        // One Euler step across the interval.
        field.eval(x_hi, t_hi, v);
        Tensor euler = x_hi;
        for (std::size_t e = 0; e < euler.size(); ++e) euler[e] += (t_lo - t_hi) * v[e];

        // Fine Heun reference across the same interval.
        Tensor ref = x_hi;
        const double hs = (t_lo - t_hi) / static_cast<double>(ref_substeps);
        for (std::size_t k = 0; k < ref_substeps; ++k) {
            const double ta = t_hi + hs * static_cast<double>(k);
            const double tb = (k + 1 == ref_substeps) ? t_lo : ta + hs;
            field.eval(ref, ta, v1);
            for (std::size_t e = 0; e < ref.size(); ++e) stage[e] = ref[e] + (tb - ta) * v1[e];
            field.eval(stage, tb, v2);
            for (std::size_t e = 0; e < ref.size(); ++e) {
                ref[e] += (tb - ta) * (0.5 * v2[e] + 0.5 * v1[e]);
            }
        }

        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            double ss = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = euler[r * d + j] - ref[r * d + j];
                ss += diff * diff;
            }
            acc += std::sqrt(ss);
        }
        out[i] = acc / static_cast<double>(m);
    }
    return out;
}

}  // namespace flowlab::ode
