#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "qkdsim/random.hpp"

namespace qkdsim {

using Complex = std::complex<double>;

// Basis bit convention everywhere in this library:
//   0 = computational (Z), 1 = diagonal (X).
inline constexpr int kBasisZ = 0;
inline constexpr int kBasisX = 1;

/// Single-photon polarization qubit, amplitudes on |0> and |1>.
struct QubitState {
    Complex amp0{1.0, 0.0};
    Complex amp1{0.0, 0.0};

    double norm_sq() const { return std::norm(amp0) + std::norm(amp1); }
    bool is_normalized(double tol = 1e-12) const {
        return std::abs(norm_sq() - 1.0) <= tol;
    }
};

/// Joint state of a photon pair, amplitudes ordered |00>, |01>, |10>, |11>.
struct TwoQubitState {
    std::array<Complex, 4> amps{};

    double norm_sq() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }
    bool is_normalized(double tol = 1e-12) const {
        return std::abs(norm_sq() - 1.0) <= tol;
    }
};

/// Announced result of a Bell-state measurement. The first four values index
/// the probability vectors returned by bell_outcome_probs.
enum class BellOutcome : int {
    PhiPlus = 0,
    PhiMinus = 1,
    PsiPlus = 2,
    PsiMinus = 3,
    NoDetection = 4,
};

inline constexpr std::size_t kBellStateCount = 4;

inline bool is_bell(BellOutcome o) { return o != BellOutcome::NoDetection; }

std::string to_string(BellOutcome o);
std::optional<BellOutcome> bell_outcome_from_string(const std::string& name);

/// Scalar free-space link model: survival probability plus a probabilistic
/// rotation standing in for polarization misalignment.
struct ChannelModel {
    double transmittance = 1.0;
    double misalignment = 0.0;
    // Rotation applied on a misalignment event. The default quarter turn
    // flips a state in both the Z and X bases, which is what makes the
    // misalignment probability show up directly as an error rate.
    double error_angle = 1.5707963267948966;  // pi/2

    bool is_valid() const {
        return transmittance >= 0.0 && transmittance <= 1.0 &&
               misalignment >= 0.0 && misalignment <= 1.0;
    }
};

/// Bell analyzer: per-photon efficiency, dark counts, and which Bell states
/// the apparatus can resolve. A linear-optics analyzer resolves only the two
/// Psi states; the full analyzer is available for ideal studies.
struct DetectorModel {
    double efficiency = 1.0;
    double dark_count_rate = 0.0;
    std::array<bool, kBellStateCount> detectable{false, false, true, true};

    static DetectorModel partial_analyzer(double eta = 1.0) {
        return DetectorModel{eta, 0.0, {false, false, true, true}};
    }
    static DetectorModel full_analyzer(double eta = 1.0) {
        return DetectorModel{eta, 0.0, {true, true, true, true}};
    }

    bool detects(BellOutcome o) const {
        return is_bell(o) && detectable[static_cast<std::size_t>(o)];
    }
    std::size_t detectable_count() const {
        std::size_t n = 0;
        for (bool d : detectable) n += d ? 1 : 0;
        return n;
    }
};

/// BB84 state H^theta |x>.
QubitState prepare_bb84(int bit, int basis);

/// Kronecker product a (x) b.
TwoQubitState tensor(const QubitState& a, const QubitState& b);

/// The four Bell states, as explicit amplitude vectors.
TwoQubitState bell_state(BellOutcome o);

/// Projection probabilities onto {Phi+, Phi-, Psi+, Psi-}, in that order.
std::array<double, kBellStateCount> bell_outcome_probs(const TwoQubitState& s);

/// Samples a Bell projection, then applies the analyzer: unresolvable
/// outcomes report NoDetection, and each photon of the pair must survive
/// detection independently (probability efficiency^2 per coincidence).
BellOutcome bell_measure(const TwoQubitState& s, const DetectorModel& det,
                         RandomStream& rng);

/// Analyzer response to a given physical projection: efficiency filtering,
/// resolvable-set filtering, dark-count substitution. bell_measure is
/// pick-from-probs followed by this.
BellOutcome apply_analyzer(BellOutcome projected, const DetectorModel& det,
                           RandomStream& rng);

/// Dark-count hook for gates with no real coincidence: with probability
/// dark_count_rate a uniformly random resolvable outcome is announced.
BellOutcome dark_event(const DetectorModel& det, RandomStream& rng);

/// Loss (nullopt) with probability 1 - transmittance, otherwise the state
/// rotated by error_angle with probability misalignment.
std::optional<QubitState> apply_channel(const QubitState& q,
                                        const ChannelModel& ch,
                                        RandomStream& rng);

/// Real rotation by `angle` in the |0>,|1> plane.
QubitState rotate(const QubitState& q, double angle);

/// Projective single-qubit measurement; returns the observed bit.
int measure_in_basis(const QubitState& q, int basis, RandomStream& rng);

/// Measures both qubits in the same basis; returns (left bit, right bit).
std::pair<int, int> measure_pair_in_basis(const TwoQubitState& s, int basis,
                                          RandomStream& rng);

/// Applies a 2x2 operator to one slot (0 = left, 1 = right) of a pair state.
TwoQubitState apply_to_qubit(const TwoQubitState& s, int slot,
                             const std::array<std::array<Complex, 2>, 2>& op);

}  // namespace qkdsim
