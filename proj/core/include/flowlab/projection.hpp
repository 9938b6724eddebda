#pragma once

#include <vector>

#include "flowlab/couplings.hpp"
#include "flowlab/sinkhorn.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::coupling {

// Marginal repair of a generated coupling: moves the x0 side of the
// backward pairs to minimize
//     energy_distance(x0 side, data_ref) + lambda * SKD(pairs, pairs_0)
// by gradient descent, where SKD is the Sinkhorn divergence between the
// current joint pairs and the original ones, and lambda is annealed
// geometrically from lambda_start. The x1 side is never modified.
struct ProjectionConfig {
    double lambda_start = 1000.0;
    double lambda_decay = 0.1;
    std::size_t max_phases = 6;
    std::size_t phase_iters = 80;
    double lr = 0.05;              // scaled by 1/(1 + lambda) per phase
    double skd_eps = 0.0;          // <= 0: 0.1 * (data diameter)^2
    std::size_t sinkhorn_max_iter = 300;
    // Stop when the marginal discrepancy improves by less than this
    // relative fraction over a phase.
    double saturation_tol = 0.01;
    // Abort when the discrepancy increases this many phases in a row.
    std::size_t divergence_patience = 5;
};

struct ProjectionResult {
    PairStore store;
    std::vector<double> lambda_history;
    std::vector<double> marginal_history;  // energy distance after each phase
    std::vector<double> skd_history;       // coupling divergence after each phase
    bool aborted = false;                  // divergence guard fired
    std::size_t phases = 0;
    double mean_displacement = 0.0;        // mean |x0_new - x0_old|
};

// Projects the backward pool of the store; data_ref is a reference sample
// from the true source distribution.
ProjectionResult project_coupling(const PairStore& store, const Tensor& data_ref,
                                  const ProjectionConfig& cfg);

// Debiased entropic divergence OT(a, b) - (OT(a, a) + OT(b, b)) / 2 on
// joint pair points; exposed for tests.
double sinkhorn_divergence(const Tensor& a, const Tensor& b, double eps,
                           std::size_t max_iter = 500);

}  // namespace flowlab::coupling
