#pragma once

#include <optional>
#include <vector>

#include "flowlab/rng.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::coupling {

// Entropic OT plan between two uniform empirical measures of equal size.
// Row i marginals over x0, column j over x1:
//   sum_ij p_ij = 1,  sum_j p_ij = 1/b,  sum_i p_ij = 1/b.
struct SinkhornPlan {
    Tensor p;  // [b, b]
    double eps = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double max_violation = 0.0;
    std::vector<double> f, g;  // converged potentials

    std::size_t size() const { return p.rank() == 2 ? p.rows() : 0; }
    // Largest deviation of any row/column sum from 1/b.
    double marginal_violation() const;
    // sum_ij p_ij c_ij with squared Euclidean cost.
    double plan_cost(const Tensor& x0, const Tensor& x1) const;
};

struct SinkhornAccel {
    // Start the regularizer here and decay geometrically to eps over the
    // first decay_iters iterations.
    std::optional<double> eps_decay_start;
    std::size_t decay_iters = 20;
    // Initialize potentials from a previous plan of the same size.
    const SinkhornPlan* warm_start = nullptr;
};

// Log-domain Sinkhorn with squared Euclidean ground cost. Convergence is
// max marginal violation < tol; on hitting max_iter the plan is returned
// with converged = false.
SinkhornPlan sinkhorn_coupling(const Tensor& x0, const Tensor& x1, double eps,
                               std::size_t max_iter = 2000, SinkhornAccel accel = {},
                               double tol = 1e-6);

// Draws b_loss index pairs (i, j) with probability p_ij and returns the
// aligned rows. Throws if the plan mass does not sum to 1.
void subsample_plan(const SinkhornPlan& plan, const Tensor& x0, const Tensor& x1,
                    std::size_t b_loss, Rng& rng, Tensor& x0_out, Tensor& x1_out);

// Exact optimal assignment cost between equal-size point sets by
// permutation enumeration; the ground-truth oracle for small instances
// (n <= 8).
double exact_assignment_cost(const Tensor& x0, const Tensor& x1);

}  // namespace flowlab::coupling
