#pragma once

#include <array>
#include <cmath>

#include "qkdsim/adversary.hpp"
#include "qkdsim/quantum.hpp"
#include "qkdsim/random.hpp"

namespace qkdsim::testing {

inline Complex random_complex(RandomStream& rng) {
    return Complex{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
}

inline QubitState random_qubit(RandomStream& rng) {
    while (true) {
        QubitState q{random_complex(rng), random_complex(rng)};
        const double n = std::sqrt(q.norm_sq());
        if (n > 1e-3) {
            q.amp0 /= n;
            q.amp1 /= n;
            return q;
        }
    }
}

inline TwoQubitState random_two_qubit(RandomStream& rng) {
    while (true) {
        TwoQubitState s;
        for (auto& a : s.amps) a = random_complex(rng);
        const double n = std::sqrt(s.norm_sq());
        if (n > 1e-3) {
            for (auto& a : s.amps) a /= n;
            return s;
        }
    }
}

inline AttackState random_attack_state(RandomStream& rng) {
    const QubitState a = random_qubit(rng);
    const QubitState b = random_qubit(rng);
    return AttackState{a.amp0, a.amp1, b.amp0, b.amp1};
}

// Independent oracle: literal inner products against explicit Bell vectors.
// Kept free of the closed-form expansion the library uses.
inline std::array<double, 4> bell_probs_oracle(const TwoQubitState& s) {
    const double r = 1.0 / std::sqrt(2.0);
    const std::array<std::array<Complex, 4>, 4> bell_vectors{{
        {Complex{r}, Complex{0.0}, Complex{0.0}, Complex{r}},   // Phi+
        {Complex{r}, Complex{0.0}, Complex{0.0}, Complex{-r}},  // Phi-
        {Complex{0.0}, Complex{r}, Complex{r}, Complex{0.0}},   // Psi+
        {Complex{0.0}, Complex{r}, Complex{-r}, Complex{0.0}},  // Psi-
    }};
    std::array<double, 4> probs{};
    for (std::size_t k = 0; k < 4; ++k) {
        Complex inner{0.0, 0.0};
        for (std::size_t i = 0; i < 4; ++i) {
            inner += std::conj(bell_vectors[k][i]) * s.amps[i];
        }
        probs[k] = std::norm(inner);
    }
    return probs;
}

}  // namespace qkdsim::testing
