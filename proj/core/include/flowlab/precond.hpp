#pragma once

#include <functional>

namespace flowlab::precond {

// Scalar coefficients for bridge interpolants of the form
//   X_t = alpha(t) X0 + beta(t) XT + gamma(t) eps,   eps ~ N(0, I),
// with per-coordinate variances var0 = Var[X0], varT = Var[XT] and
// covariance cov0T = Cov[X0, XT]. The scalars below normalize the network
// input to unit variance (c_in), pick the variance-minimizing skip
// connection (c_skip), scale the network output so the regression target
// has unit variance (c_out), and weight the loss uniformly over t
// (lambda_w = c_out^-2).
struct BridgeSpec {
    std::function<double(double)> alpha;
    std::function<double(double)> beta;
    std::function<double(double)> gamma;
    double var0 = 1.0;
    double varT = 1.0;
    double cov0T = 0.0;
};

// Linear interpolant x_t = (1-t) x0 + t x1 against a unit-variance prior,
// independent coupling (cov0T = 0, gamma = 0).
BridgeSpec flow_matching_bridge(double var0);

// Denominator alpha^2 var0 + 2 alpha beta cov0T + beta^2 varT + gamma^2;
// must stay positive on the working t-grid.
double input_variance(const BridgeSpec& spec, double t);

double c_in(const BridgeSpec& spec, double t);
double c_skip(const BridgeSpec& spec, double t);
// Positive square root; throws numeric_error when c_out^2 < 0 numerically.
double c_out(const BridgeSpec& spec, double t);
double c_out_sq(const BridgeSpec& spec, double t);
// c_out^-2; throws when c_out^2 is not strictly positive.
double lambda_w(const BridgeSpec& spec, double t);

// c_out^2 as a function of an arbitrary skip coefficient (the quadratic
// whose minimizer is c_skip); exposed for the optimality checks.
double c_out_sq_at_skip(const BridgeSpec& spec, double t, double skip);

}  // namespace flowlab::precond
