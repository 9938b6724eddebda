#pragma once

#include <cstdint>
#include <random>

namespace flowlab {

// Deterministic random stream. All sampling goes through explicit
// bit-to-double conversions instead of std distributions, so a given
// (seed, call sequence) reproduces the same values on one machine
// regardless of standard library version.
class Rng {
 public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1).
    double uniform();
    // Uniform on (0, 1), both endpoints excluded; safe for inverse CDFs.
    double uniform_open();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal();
    double normal(double mean, double stddev);

    // Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    bool bernoulli(double p);

    // Derives an independent stream; deterministic in (seed, stream).
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

 private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace flowlab
