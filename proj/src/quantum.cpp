#include "qkdsim/quantum.hpp"

#include <cassert>
#include <cmath>

namespace qkdsim {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;

}  // namespace

std::string to_string(BellOutcome o) {
    switch (o) {
        case BellOutcome::PhiPlus: return "PhiPlus";
        case BellOutcome::PhiMinus: return "PhiMinus";
        case BellOutcome::PsiPlus: return "PsiPlus";
        case BellOutcome::PsiMinus: return "PsiMinus";
        case BellOutcome::NoDetection: return "NoDetection";
    }
    return "NoDetection";
}

std::optional<BellOutcome> bell_outcome_from_string(const std::string& name) {
    if (name == "PhiPlus") return BellOutcome::PhiPlus;
    if (name == "PhiMinus") return BellOutcome::PhiMinus;
    if (name == "PsiPlus") return BellOutcome::PsiPlus;
    if (name == "PsiMinus") return BellOutcome::PsiMinus;
    if (name == "NoDetection") return BellOutcome::NoDetection;
    return std::nullopt;
}

QubitState prepare_bb84(int bit, int basis) {
    assert((bit == 0 || bit == 1) && (basis == 0 || basis == 1));
    if (basis == kBasisZ) {
        return bit == 0 ? QubitState{1.0, 0.0} : QubitState{0.0, 1.0};
    }
    // H|0> = |+>, H|1> = |->
    return bit == 0 ? QubitState{kInvSqrt2, kInvSqrt2}
                    : QubitState{kInvSqrt2, -kInvSqrt2};
}

TwoQubitState tensor(const QubitState& a, const QubitState& b) {
    TwoQubitState s;
    s.amps[0] = a.amp0 * b.amp0;
    s.amps[1] = a.amp0 * b.amp1;
    s.amps[2] = a.amp1 * b.amp0;
    s.amps[3] = a.amp1 * b.amp1;
    return s;
}

TwoQubitState bell_state(BellOutcome o) {
    TwoQubitState s;
    switch (o) {
        case BellOutcome::PhiPlus:
            s.amps = {Complex{kInvSqrt2}, 0.0, 0.0, Complex{kInvSqrt2}};
            break;
        case BellOutcome::PhiMinus:
            s.amps = {Complex{kInvSqrt2}, 0.0, 0.0, Complex{-kInvSqrt2}};
            break;
        case BellOutcome::PsiPlus:
            s.amps = {0.0, Complex{kInvSqrt2}, Complex{kInvSqrt2}, 0.0};
            break;
        case BellOutcome::PsiMinus:
            s.amps = {0.0, Complex{kInvSqrt2}, Complex{-kInvSqrt2}, 0.0};
            break;
        case BellOutcome::NoDetection:
            assert(false && "NoDetection has no state vector");
            break;
    }
    return s;
}

std::array<double, kBellStateCount> bell_outcome_probs(const TwoQubitState& s) {
    // |<Bell_k|s>|^2 expanded over the computational amplitudes.
    const Complex& a00 = s.amps[0];
    const Complex& a01 = s.amps[1];
    const Complex& a10 = s.amps[2];
    const Complex& a11 = s.amps[3];
    return {
        0.5 * std::norm(a00 + a11),  // Phi+
        0.5 * std::norm(a00 - a11),  // Phi-
        0.5 * std::norm(a01 + a10),  // Psi+
        0.5 * std::norm(a01 - a10),  // Psi-
    };
}

BellOutcome dark_event(const DetectorModel& det, RandomStream& rng) {
    if (det.dark_count_rate <= 0.0 || det.detectable_count() == 0) {
        return BellOutcome::NoDetection;
    }
    if (!rng.bernoulli(det.dark_count_rate)) return BellOutcome::NoDetection;
    // Uniform over the resolvable outcomes.
    auto index = rng.raw() % det.detectable_count();
    for (std::size_t k = 0; k < kBellStateCount; ++k) {
        if (!det.detectable[k]) continue;
        if (index == 0) return static_cast<BellOutcome>(k);
        --index;
    }
    return BellOutcome::NoDetection;
}

BellOutcome apply_analyzer(BellOutcome projected, const DetectorModel& det,
                           RandomStream& rng) {
    // Two photons feed the coincidence; each survives with probability
    // efficiency. Drawn unconditionally so that runs with different analyzer
    // configurations consume the stream identically.
    const bool click0 = rng.bernoulli(det.efficiency);
    const bool click1 = rng.bernoulli(det.efficiency);

    if (det.detects(projected) && click0 && click1) return projected;
    return dark_event(det, rng);
}

BellOutcome bell_measure(const TwoQubitState& s, const DetectorModel& det,
                         RandomStream& rng) {
    const auto probs = bell_outcome_probs(s);
    const auto projected = static_cast<BellOutcome>(rng.pick(probs));
    return apply_analyzer(projected, det, rng);
}

std::optional<QubitState> apply_channel(const QubitState& q,
                                        const ChannelModel& ch,
                                        RandomStream& rng) {
    if (!rng.bernoulli(ch.transmittance)) return std::nullopt;
    if (ch.misalignment > 0.0 && rng.bernoulli(ch.misalignment)) {
        return rotate(q, ch.error_angle);
    }
    return q;
}

QubitState rotate(const QubitState& q, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return QubitState{c * q.amp0 - s * q.amp1, s * q.amp0 + c * q.amp1};
}

int measure_in_basis(const QubitState& q, int basis, RandomStream& rng) {
    double p1;
    if (basis == kBasisZ) {
        p1 = std::norm(q.amp1);
    } else {
        // Outcome 1 corresponds to |->.
        p1 = 0.5 * std::norm(q.amp0 - q.amp1);
    }
    return rng.bernoulli(p1) ? 1 : 0;
}

std::pair<int, int> measure_pair_in_basis(const TwoQubitState& s, int basis,
                                          RandomStream& rng) {
    TwoQubitState t = s;
    if (basis == kBasisX) {
        // Rotate both qubits into the computational basis with H (x) H.
        const auto& a = s.amps;
        t.amps[0] = 0.5 * (a[0] + a[1] + a[2] + a[3]);
        t.amps[1] = 0.5 * (a[0] - a[1] + a[2] - a[3]);
        t.amps[2] = 0.5 * (a[0] + a[1] - a[2] - a[3]);
        t.amps[3] = 0.5 * (a[0] - a[1] - a[2] + a[3]);
    }
    std::array<double, 4> probs{};
    for (std::size_t i = 0; i < 4; ++i) probs[i] = std::norm(t.amps[i]);
    const auto joint = rng.pick(probs);
    return {static_cast<int>(joint >> 1), static_cast<int>(joint & 1)};
}

TwoQubitState apply_to_qubit(const TwoQubitState& s, int slot,
                             const std::array<std::array<Complex, 2>, 2>& op) {
    TwoQubitState out;
    if (slot == 0) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.amps[2 * i + j] =
                    op[i][0] * s.amps[j] + op[i][1] * s.amps[2 + j];
    } else {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.amps[2 * i + j] =
                    op[j][0] * s.amps[2 * i] + op[j][1] * s.amps[2 * i + 1];
    }
    return out;
}

}  // namespace qkdsim
