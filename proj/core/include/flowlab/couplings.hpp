#pragma once

#include <cstdint>
#include <string>

#include "flowlab/dataset.hpp"
#include "flowlab/rng.hpp"
#include "flowlab/solver.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::coupling {

// Empirical coupling with two pools:
//   backward pairs: x1 drawn from the prior, x0 = solve(x1, 1 -> 0);
//   forward pairs:  x0 exact dataset points, x1 = solve(x0, 0 -> 1).
// rho is the probability of drawing a forward pair per batch slot.
struct PairStore {
    Tensor backward_x0, backward_x1;  // [nb, d]
    Tensor forward_x0, forward_x1;    // [nf, d]
    double rho = 0.0;
    std::uint64_t teacher_hash = 0;

    std::size_t dim() const;
    std::size_t n_backward() const { return backward_x0.rank() == 2 ? backward_x0.rows() : 0; }
    std::size_t n_forward() const { return forward_x0.rank() == 2 ? forward_x0.rows() : 0; }
    void validate() const;
};

// x0 ~ data, x1 ~ N(0, I), drawn independently; stored as backward pairs
// with rho = 0.
PairStore independent_coupling(const data::DataSampler& dataset, std::size_t n, Rng& rng);

struct PairGenResult {
    PairStore store;
    std::size_t dropped = 0;  // non-finite solves
    std::size_t requested = 0;
};

// Generates n backward pairs by integrating the field from prior samples
// at t = 1 down to t = 0. Non-finite rows are dropped and counted; a drop
// rate above max_drop_rate fails the run.
PairGenResult generate_backward_pairs(const ode::VelocityField& field, std::size_t n,
                                      const ode::SolverCfg& solver_cfg, Rng& rng,
                                      double max_drop_rate = 0.01);

// Mirror image: x0 runs over the given dataset points, x1 = solve(0 -> 1).
PairGenResult generate_forward_pairs(const ode::VelocityField& field, const Tensor& dataset,
                                     const ode::SolverCfg& solver_cfg,
                                     double max_drop_rate = 0.01);

// Draws a batch; each slot independently takes a forward pair with
// probability rho, else a backward pair.
void sample_pairs(const PairStore& store, std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1);

// --- binary persistence ------------------------------------------------------

// Little-endian layout: magic "FLPS", u32 version, u32 dim, u64 counts,
// f64 rho, u64 teacher hash, then the four double arrays.
void save_pairs(const std::string& path, const PairStore& store);
PairStore load_pairs(const std::string& path);

}  // namespace flowlab::coupling
