#pragma once

#include <string>

#include "flowlab/rng.hpp"

namespace flowlab::loss {

enum class TimeDistKind { uniform, cosh, lognormal, exponential };

const char* time_dist_name(TimeDistKind k);
TimeDistKind time_dist_from_name(const std::string& name);

// Training-time distribution on (0, 1). Sampling is inverse-CDF (or a
// direct transform for lognormal), so a fixed rng stream reproduces the
// same t sequence for every distribution kind.
struct TimeDist {
    TimeDistKind kind = TimeDistKind::uniform;
    double a = 1.0;        // exponential: density proportional to a^t, a >= 1
    double p_mean = -1.2;  // lognormal location of log sigma
    double p_std = 1.2;    // lognormal scale of log sigma

    static TimeDist uniform();
    // density proportional to cosh(4 (t - 1/2))
    static TimeDist cosh_peaked();
    // sigma = exp(N(p_mean, p_std^2)), t = sigma / (1 + sigma)
    static TimeDist lognormal(double p_mean = -1.2, double p_std = 1.2);
    // density proportional to a^t; a = 1 degenerates to uniform
    static TimeDist exponential(double a);

    double sample(Rng& rng) const;
    // Maps u in (0, 1) through the inverse CDF (lognormal uses the normal
    // quantile of u).
    double inverse_cdf(double u) const;
    // Normalized density on (0, 1).
    double density(double t) const;

    void validate() const;
};

}  // namespace flowlab::loss
