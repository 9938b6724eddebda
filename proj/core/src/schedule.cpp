#include "flowlab/schedule.hpp"

#include <cmath>

#include "flowlab/error.hpp"

namespace flowlab::ode {

const char* schedule_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::uniform: return "uniform";
        case ScheduleKind::edm: return "edm";
        case ScheduleKind::sigmoid: return "sigmoid";
    }
    return "uniform";
}

ScheduleKind schedule_from_name(const std::string& name) {
    if (name == "uniform") return ScheduleKind::uniform;
    if (name == "edm") return ScheduleKind::edm;
    if (name == "sigmoid") return ScheduleKind::sigmoid;
    throw config_error("unknown schedule: " + name);
}

namespace {

double sig(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

Schedule Schedule::uniform(std::size_t n) {
    if (n < 1) throw config_error("schedule: N must be >= 1");
    Schedule s;
    s.kind = ScheduleKind::uniform;
    s.steps = n;
    s.grid.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        s.grid[i] = static_cast<double>(i) / static_cast<double>(n);
    }
    s.validate();
    return s;
}

Schedule Schedule::sigmoid(std::size_t n, double kappa) {
    if (n < 1) throw config_error("schedule: N must be >= 1");
    if (kappa <= 0.0) throw config_error("schedule: sigmoid kappa must be positive");
    Schedule s;
    s.kind = ScheduleKind::sigmoid;
    s.steps = n;
    s.kappa = kappa;
    s.grid.resize(n + 1);
    const double lo = sig(-kappa / 2.0);
    const double hi = sig(kappa / 2.0);
    for (std::size_t i = 0; i <= n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n);
        s.grid[i] = (sig(kappa * (u - 0.5)) - lo) / (hi - lo);
    }
    // The affine normalization hits the endpoints exactly.
    s.grid[0] = 0.0;
    s.grid[n] = 1.0;
    // Very sharp kappa saturates interior knots to 0 or 1 below double
    // resolution; spread ties by one ulp to keep the grid strictly
    // increasing (the intervals are then effectively empty).
    for (std::size_t i = 1; i < n; ++i) {
        if (s.grid[i] <= s.grid[i - 1]) {
            s.grid[i] = std::nextafter(s.grid[i - 1], 2.0);
        }
    }
    for (std::size_t i = n; i-- > 1;) {
        if (s.grid[i] >= s.grid[i + 1]) {
            s.grid[i] = std::nextafter(s.grid[i + 1], -1.0);
        }
    }
    s.validate();
    return s;
}

Schedule Schedule::edm(std::size_t n, double sigma_min, double sigma_max, double rho) {
    if (n < 1) throw config_error("schedule: N must be >= 1");
    if (sigma_min <= 0.0 || sigma_max <= sigma_min) {
        throw config_error("schedule: need 0 < sigma_min < sigma_max");
    }
    if (rho <= 0.0) throw config_error("schedule: edm exponent must be positive");
    Schedule s;
    s.kind = ScheduleKind::edm;
    s.steps = n;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.rho = rho;
    s.grid.resize(n + 1);
    s.grid[0] = 0.0;
    const double lo = std::pow(sigma_min, 1.0 / rho);
    const double hi = std::pow(sigma_max, 1.0 / rho);
    for (std::size_t i = 1; i <= n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n);
        const double sigma = std::pow(lo + u * (hi - lo), rho);
        s.grid[i] = sigma / (sigma + 1.0);  // stays strictly below 1
    }
    s.validate();
    return s;
}

void Schedule::validate() const {
    if (grid.size() != steps + 1) throw error("schedule: grid size mismatch");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1])) {
            throw numeric_error("schedule: grid must be strictly increasing");
        }
    }
    if (grid.front() != 0.0) throw numeric_error("schedule: t_0 must be 0");
    if (grid.back() > 1.0) throw numeric_error("schedule: t_N must be <= 1");
}

}  // namespace flowlab::ode
