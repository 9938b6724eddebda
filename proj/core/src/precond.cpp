#include "flowlab/precond.hpp"

#include <cmath>
#include <string>

#include "flowlab/error.hpp"

namespace flowlab::precond {

BridgeSpec flow_matching_bridge(double var0) {
    BridgeSpec spec;
    spec.alpha = [](double t) { return 1.0 - t; };
    spec.beta = [](double t) { return t; };
    spec.gamma = [](double) { return 0.0; };
    spec.var0 = var0;
    spec.varT = 1.0;
    spec.cov0T = 0.0;
    return spec;
}

double input_variance(const BridgeSpec& spec, double t) {
    const double a = spec.alpha(t), b = spec.beta(t), g = spec.gamma(t);
    return a * a * spec.var0 + 2.0 * a * b * spec.cov0T + b * b * spec.varT + g * g;
}

double c_in(const BridgeSpec& spec, double t) {
    const double v = input_variance(spec, t);
    if (v <= 0.0) {
        throw numeric_error("c_in: input variance is not positive at t = " + std::to_string(t));
    }
    return 1.0 / std::sqrt(v);
}

double c_skip(const BridgeSpec& spec, double t) {
    const double a = spec.alpha(t), b = spec.beta(t);
    const double denom = input_variance(spec, t);
    if (denom <= 0.0) {
        throw numeric_error("c_skip: input variance is not positive at t = " + std::to_string(t));
    }
    return (a * spec.var0 + b * spec.cov0T) / denom;
}

double c_out_sq_at_skip(const BridgeSpec& spec, double t, double skip) {
    // Var[X0 - skip * X_t] expanded in the bridge coefficients.
    const double a = spec.alpha(t), b = spec.beta(t), g = spec.gamma(t);
    const double one_minus = 1.0 - a * skip;
    return one_minus * one_minus * spec.var0 - 2.0 * b * one_minus * skip * spec.cov0T +
           skip * skip * b * b * spec.varT + g * g * skip * skip;
}

double c_out_sq(const BridgeSpec& spec, double t) {
    return c_out_sq_at_skip(spec, t, c_skip(spec, t));
}

double c_out(const BridgeSpec& spec, double t) {
    const double sq = c_out_sq(spec, t);
    constexpr double kTol = 1e-12;
    if (sq < -kTol) {
        throw numeric_error("c_out: negative c_out^2 at t = " + std::to_string(t));
    }
    return sq > 0.0 ? std::sqrt(sq) : 0.0;
}

double lambda_w(const BridgeSpec& spec, double t) {
    const double sq = c_out_sq(spec, t);
    if (sq <= 0.0) {
        throw numeric_error("lambda_w: c_out^2 is not strictly positive at t = " +
                            std::to_string(t));
    }
    return 1.0 / sq;
}

}  // namespace flowlab::precond
