#pragma once

#include <utility>
#include <vector>

#include "flowlab/schedule.hpp"
#include "flowlab/solver.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::metrics {

// Monte-Carlo trajectories with their grid; endpoints are the
// trajectory's own initial (t = 1) and terminal (t = 0) states.
struct TrajectoryBatch {
    std::vector<Tensor> states;  // (N+1) tensors of [n, d], ascending t order
    std::vector<double> times;   // ascending
    Tensor x0;                   // terminal states at t = 0
    Tensor x1;                   // initial states at t = 1
};

// Simulates n_traj trajectories of the field from standard normal initial
// points at t = 1 down to t = 0 on a fine uniform Heun grid.
TrajectoryBatch simulate_trajectories(const ode::VelocityField& field, std::size_t n_traj,
                                      std::size_t fine_n, Rng& rng);

// Straightness S = integral over t of E | (x1 - x0) - v(x_t, t) |_2,
// trapezoid rule over the trajectory grid. Zero iff the sampled velocity
// equals the chord everywhere on the probes.
double straightness(const ode::VelocityField& field, std::size_t n_traj, std::size_t fine_n,
                    Rng& rng);
double straightness(const ode::VelocityField& field, const TrajectoryBatch& traj);

// Mean squared pair distance E |x0 - x1|^2.
double transport_cost(const Tensor& x0, const Tensor& x1);

// Energy distance 2 E|A - B| - E|A - A'| - E|B - B'| with U-statistic
// within-sample terms, clamped at zero.
double energy_distance(const Tensor& a, const Tensor& b);

// Exact posterior mean E[x0 | x_t] for a discrete pair coupling, smoothed
// with an isotropic Gaussian kernel of the given bandwidth around each
// pair's interpolation point. bandwidth <= 0 selects
// 0.01 * diameter(x0 points).
Tensor posterior_mean_oracle(const Tensor& x0, const Tensor& x1, const Tensor& x_t_query,
                             double t, double bandwidth = 0.0);

// Flow-time / noise-scale change of variables sigma = t / (1 - t).
double time_to_sigma(double t);
double sigma_to_time(double sigma);
// State scaling y = x / (1 - t) and its inverse x = y / (1 + sigma).
std::pair<Tensor, double> to_noise_coords(const Tensor& x, double t);
std::pair<Tensor, double> from_noise_coords(const Tensor& y, double sigma);

}  // namespace flowlab::metrics
