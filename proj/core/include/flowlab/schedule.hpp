#pragma once

#include <string>
#include <vector>

namespace flowlab::ode {

enum class ScheduleKind { uniform, edm, sigmoid };

const char* schedule_name(ScheduleKind k);
ScheduleKind schedule_from_name(const std::string& name);

// Monotone time grid t_0 < ... < t_N over [0, 1].
//   uniform: t_i = i/N, endpoints exactly 0 and 1.
//   sigmoid: t_i = (sig(kappa(i/N - 1/2)) - sig(-kappa/2))
//                  / (sig(kappa/2) - sig(-kappa/2)),
//            endpoints exactly 0 and 1; kappa -> 0 recovers uniform and
//            large kappa clusters the grid at both ends.
//   edm:     t_0 = 0 and t_i = sigma_i / (sigma_i + 1) with
//            sigma_i = (smin^(1/d) + (i/N)(smax^(1/d) - smin^(1/d)))^d,
//            so t_N = smax / (smax + 1) < 1.
struct Schedule {
    ScheduleKind kind = ScheduleKind::uniform;
    std::size_t steps = 0;      // N, number of intervals
    std::vector<double> grid;   // N + 1 knots, strictly increasing
    double kappa = 0.0;
    double sigma_min = 0.0, sigma_max = 0.0, rho = 0.0;

    static Schedule uniform(std::size_t n);
    static Schedule sigmoid(std::size_t n, double kappa);
    static Schedule edm(std::size_t n, double sigma_min = 0.002, double sigma_max = 80.0,
                        double rho = 7.0);

    double t(std::size_t i) const { return grid[i]; }
    void validate() const;
};

}  // namespace flowlab::ode
