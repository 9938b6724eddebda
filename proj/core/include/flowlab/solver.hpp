#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "flowlab/nn.hpp"
#include "flowlab/schedule.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::ode {

// Batched velocity field v(x, t). Implementations must be safe for
// concurrent eval() calls.
class VelocityField {
 public:
    virtual ~VelocityField() = default;
    virtual std::size_t dim() const = 0;
    // x: [m, dim] -> out: [m, dim]
    virtual void eval(const Tensor& x, double t, Tensor& out) const = 0;

    Tensor operator()(const Tensor& x, double t) const {
        Tensor out(x.shape());
        eval(x, t, out);
        return out;
    }
};

// Velocity of a denoiser: (x - D(x, t)) / max(t, floor).
class DenoiserVelocity final : public VelocityField {
 public:
    explicit DenoiserVelocity(const nn::Denoiser& d, const Tensor* label = nullptr);
    std::size_t dim() const override;
    void eval(const Tensor& x, double t, Tensor& out) const override;

 private:
    const nn::Denoiser& d_;
    const Tensor* label_;
};

// Constant field v(x, t) = c.
class ConstantField final : public VelocityField {
 public:
    explicit ConstantField(Tensor c) : c_(std::move(c)) {}
    std::size_t dim() const override { return c_.size(); }
    void eval(const Tensor& x, double t, Tensor& out) const override;

 private:
    Tensor c_;
};

// Arbitrary callable field for tests and synthetic problems.
class CallableField final : public VelocityField {
 public:
    using Fn = std::function<void(const Tensor&, double, Tensor&)>;
    CallableField(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
    std::size_t dim() const override { return dim_; }
    void eval(const Tensor& x, double t, Tensor& out) const override { fn_(x, t, out); }

 private:
    std::size_t dim_;
    Fn fn_;
};

// (1 + g) v_main - g v_aux. Covers classifier-free guidance (main =
// conditional, aux = null-label) and autoguidance (aux = a degraded net).
class GuidedField final : public VelocityField {
 public:
    GuidedField(const VelocityField& main, const VelocityField& aux, double scale);
    std::size_t dim() const override { return main_.dim(); }
    void eval(const Tensor& x, double t, Tensor& out) const override;

 private:
    const VelocityField& main_;
    const VelocityField& aux_;
    double scale_;
};

// Builds the autoguidance combination from a main net and a degraded
// (e.g. early-training) checkpoint of it. Both nets must share the
// data dimension.
struct AutoguidancePair {
    AutoguidancePair(const nn::Denoiser& main, const nn::Denoiser& degraded, double scale);
    DenoiserVelocity main_velocity;
    DenoiserVelocity degraded_velocity;
    GuidedField field;
};

enum class Method { euler, heun, dpm };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct SolverCfg {
    Method method = Method::heun;
    double dpm_r = 1.0;            // in (0, 1]; r = 1 matches the Heun update
    Schedule schedule;             // ascending grid t_0..t_N
    bool forward = false;          // false: integrate 1 -> 0; true: 0 -> 1
    // Replace the two-stage update by a single Euler step on the final
    // interval toward t = 0, where the velocity cannot be evaluated;
    // N intervals then cost 2N - 1 evaluations.
    bool final_step_euler = true;
    // Floor for the DPM intermediate time s = t_to^r * t_from^(1-r).
    double t_floor = nn::kVelocityTimeFloor;
    bool record_trajectory = false;

    void validate() const;
};

struct SolveResult {
    Tensor terminal;                 // [m, d]
    std::vector<Tensor> trajectory;  // states at grid knots when recorded
    std::vector<double> times;       // knot times in traversal order
    std::size_t nfe = 0;             // velocity evaluations per sample
    std::vector<std::uint8_t> finite;  // per-row: stayed finite throughout
    std::size_t n_nonfinite = 0;
};

// Integrates the field along the schedule. Throws numeric_error with the
// step index if any row turns non-finite.
SolveResult solve(const Tensor& x_init, const VelocityField& field, const SolverCfg& cfg);

// Same integration, but non-finite rows are only flagged in the result;
// used by pair generation, which drops and counts bad rows.
SolveResult solve_flagging_nonfinite(const Tensor& x_init, const VelocityField& field,
                                     const SolverCfg& cfg);

// Declared number of velocity evaluations for a config.
std::size_t expected_nfe(const SolverCfg& cfg);

// Mean local truncation error per interval: the single Euler step across
// [t_i, t_{i+1}] (toward t_i) against a fine reference solve with
// ref_substeps Heun sub-steps, with the interval states x_{t_{i+1}}
// formed by interpolating the given coupled pairs. Returns N values,
// entry i for the interval [t_i, t_{i+1}].
std::vector<double> truncation_error(const VelocityField& field, const Schedule& schedule,
                                     const Tensor& x0, const Tensor& x1,
                                     std::size_t ref_substeps = 64);

}  // namespace flowlab::ode
