#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace qkdsim {

/// Deterministic random stream. Every stochastic operation in the library
/// draws through this wrapper instead of std::*_distribution so that a seed
/// pins the exact output sequence independently of the standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Fair bit.
    int bit() { return static_cast<int>(engine_() & 1ull); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn from a discrete distribution. Weights must be non-negative
    /// and sum to ~1; fp slack at the tail falls back to the last index with
    /// positive weight, so zero-weight outcomes are never produced.
    template <std::size_t N>
    std::size_t pick(const std::array<double, N>& weights) {
        double u = uniform();
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < N; ++i) {
            if (weights[i] > 0.0) last_positive = i;
        }
        for (std::size_t i = 0; i < N; ++i) {
            cumulative += weights[i];
            if (u < cumulative) return i;
        }
        return last_positive;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace qkdsim
