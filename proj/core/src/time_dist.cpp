#include "flowlab/time_dist.hpp"

#include <cmath>

#include "flowlab/error.hpp"

namespace flowlab::loss {

const char* time_dist_name(TimeDistKind k) {
    switch (k) {
        case TimeDistKind::uniform: return "uniform";
        case TimeDistKind::cosh: return "cosh";
        case TimeDistKind::lognormal: return "lognormal";
        case TimeDistKind::exponential: return "exponential";
    }
    return "uniform";
}

TimeDistKind time_dist_from_name(const std::string& name) {
    if (name == "uniform") return TimeDistKind::uniform;
    if (name == "cosh") return TimeDistKind::cosh;
    if (name == "lognormal") return TimeDistKind::lognormal;
    if (name == "exponential") return TimeDistKind::exponential;
    throw config_error("unknown time distribution: " + name);
}

TimeDist TimeDist::uniform() {
    return TimeDist{};
}

TimeDist TimeDist::cosh_peaked() {
    TimeDist d;
    d.kind = TimeDistKind::cosh;
    return d;
}

TimeDist TimeDist::lognormal(double p_mean, double p_std) {
    TimeDist d;
    d.kind = TimeDistKind::lognormal;
    d.p_mean = p_mean;
    d.p_std = p_std;
    d.validate();
    return d;
}

TimeDist TimeDist::exponential(double a) {
    TimeDist d;
    d.kind = TimeDistKind::exponential;
    d.a = a;
    d.validate();
    return d;
}

void TimeDist::validate() const {
    if (kind == TimeDistKind::exponential && a < 1.0) {
        throw config_error("time_dist.a: exponential base must be >= 1");
    }
    if (kind == TimeDistKind::lognormal && p_std <= 0.0) {
        throw config_error("time_dist.p_std: must be positive");
    }
}

namespace {

// Acklam's rational approximation of the standard normal quantile,
// polished with one Halley step on erfc. Accurate to ~1e-15 on (0, 1).
double normal_quantile(double u) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double w = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    (void)pdf;
    return x - w / (1.0 + x * w / 2.0);
}

}  // namespace

double TimeDist::inverse_cdf(double u) const {
    switch (kind) {
        case TimeDistKind::uniform:
            return u;
        case TimeDistKind::exponential: {
            if (a == 1.0) return u;
            return std::log1p(u * (a - 1.0)) / std::log(a);
        }
        case TimeDistKind::cosh: {
            // CDF(t) = (sinh(4(t - 1/2)) + sinh 2) / (2 sinh 2)
            const double s2 = std::sinh(2.0);
            return 0.5 + std::asinh((2.0 * u - 1.0) * s2) / 4.0;
        }
        case TimeDistKind::lognormal: {
            const double z = normal_quantile(u);
            const double sigma = std::exp(p_mean + p_std * z);
            return sigma / (1.0 + sigma);
        }
    }
    return u;
}

double TimeDist::sample(Rng& rng) const {
    if (kind == TimeDistKind::lognormal) {
        const double sigma = std::exp(p_mean + p_std * rng.normal());
        return sigma / (1.0 + sigma);
    }
    return inverse_cdf(rng.uniform_open());
}

double TimeDist::density(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    switch (kind) {
        case TimeDistKind::uniform:
            return 1.0;
        case TimeDistKind::exponential: {
            if (a == 1.0) return 1.0;
            return std::pow(a, t) * std::log(a) / (a - 1.0);
        }
        case TimeDistKind::cosh:
            return 2.0 * std::cosh(4.0 * (t - 0.5)) / std::sinh(2.0);
        case TimeDistKind::lognormal: {
            const double sigma = t / (1.0 - t);
            const double z = (std::log(sigma) - p_mean) / p_std;
            const double pdf_sigma =
                std::exp(-0.5 * z * z) / (sigma * p_std * std::sqrt(2.0 * M_PI));
            return pdf_sigma / ((1.0 - t) * (1.0 - t));
        }
    }
    return 0.0;
}

}  // namespace flowlab::loss
