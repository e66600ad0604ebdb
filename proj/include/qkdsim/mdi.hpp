#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qkdsim/bits.hpp"
#include "qkdsim/quantum.hpp"
#include "qkdsim/random.hpp"

namespace qkdsim {

/// One protocol round: both users' preparations plus the relay announcement.
struct MdiRound {
    int bit_a = 0;
    int basis_a = 0;
    int bit_b = 0;
    int basis_b = 0;
    BellOutcome announced = BellOutcome::NoDetection;
};

struct MdiSessionConfig {
    std::uint64_t rounds = 1;
    ChannelModel channel_a;
    ChannelModel channel_b;
    DetectorModel detector;  // partial analyzer by default
    std::uint64_t seed = 0;
};

/// A sifted key bit pair together with the evidence it came from.
struct SiftedBit {
    int key_a = 0;
    int key_b = 0;
    int basis = 0;
    BellOutcome announced = BellOutcome::NoDetection;
};

struct ErrorEstimate {
    std::optional<double> qber_z;  // nullopt when no kept rounds in that basis
    std::optional<double> qber_x;
};

struct MdiSessionResult {
    Bits key_a;
    Bits key_b;
    std::optional<double> qber_z;
    std::optional<double> qber_x;
    double gain = 0.0;  // announced coincidences / rounds
    std::uint64_t rounds = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t kept_z = 0;
    std::uint64_t kept_x = 0;
    std::uint64_t errors_z = 0;
    std::uint64_t errors_x = 0;
};

/// Runs one round: prepare both states, push them through the channels, and
/// let the relay measure. A lost photon on either arm means no coincidence.
MdiRound run_mdi_round(int bit_a, int basis_a, int bit_b, int basis_b,
                       const MdiSessionConfig& cfg, RandomStream& rng);

/// Sifting rule for a single round. Kept rounds have matching bases and a
/// Psi announcement; Bob flips his bit in the Z basis always and in the X
/// basis on Psi-, which aligns his key with Alice's under the Bell
/// correlations.
std::optional<SiftedBit> sift_round(const MdiRound& round);

std::vector<SiftedBit> sift(const std::vector<MdiRound>& rounds);

ErrorEstimate estimate_errors(const std::vector<SiftedBit>& sifted);

/// Full session with uniform random bits and bases on both arms.
MdiSessionResult run_mdi_session(const MdiSessionConfig& cfg);

/// Reruns the session at each detector efficiency (same seed) and reports
/// (eta, gain) pairs.
std::vector<std::pair<double, double>> gain_scaling(
    const MdiSessionConfig& cfg, const std::vector<double>& eta_values);

}  // namespace qkdsim
