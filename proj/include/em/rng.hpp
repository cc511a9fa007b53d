#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "em/errors.hpp"

namespace em {

// SplitMix64: tiny 64-bit PRNG with hash-derived child streams. All sampling
// in the library goes through explicit Bernoulli sums built on this generator,
// never through std:: distributions, so sampled runs with a fixed seed are
// byte-identical across platforms, compilers and reruns.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double next_open_double() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller (cosine branch).
    double next_gaussian() {
        const double u = next_open_double();
        const double v = next_double();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
    }

    // Independent stream derived from the *original* seed and a stream index.
    // Children do not depend on how much of the parent has been consumed, so a
    // run that draws one child per phase point is schedule-independent.
    Rng child(std::uint64_t index) const {
        return Rng(mix(seed_ ^ mix(0x9E3779B97F4A7C15ull * (index + 1))));
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
};

// Binomial(shots, p) as an explicit Bernoulli sum; deterministic given the rng
// state and cheap enough for the shot counts used here.
inline long long sample_binomial(Rng& rng, long long shots, double p) {
    if (shots < 0) throw InvalidInput("shots must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("probability out of range");
    long long hits = 0;
    for (long long s = 0; s < shots; ++s)
        if (rng.next_double() < p) ++hits;
    return hits;
}

} // namespace em
