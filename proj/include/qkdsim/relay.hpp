#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkdsim/bits.hpp"
#include "qkdsim/quantum.hpp"

namespace qkdsim {

enum class RelayMode : int { UntrustedMdi = 0, TrustedBb84 = 1 };

std::string to_string(RelayMode mode);

/// The reconfigurable relay. The physical switch (photon delay plus waveplate
/// rotation) is abstracted into the active mode: UntrustedMdi measures
/// coincident photons in the Bell basis, TrustedBb84 measures each user's
/// photon independently in a per-round random basis.
class Relay {
public:
    explicit Relay(RelayMode mode = RelayMode::UntrustedMdi) : mode_(mode) {}

    RelayMode mode() const { return mode_; }
    void switch_mode(RelayMode target) { mode_ = target; }
    void toggle_mode() {
        mode_ = mode_ == RelayMode::UntrustedMdi ? RelayMode::TrustedBb84
                                                 : RelayMode::UntrustedMdi;
    }

private:
    RelayMode mode_;
};

/// Key bits shared by a named pair of parties.
struct KeyMaterial {
    Bits bits;
    std::string owner_a;
    std::string owner_b;
};

struct Bb84LinkConfig {
    std::uint64_t rounds = 1;
    ChannelModel channel;
    DetectorModel detector;  // only the efficiency matters for a single link
    std::uint64_t seed = 0;
    // Reserved for weak-coherent sources; the simulator emits ideal single
    // photons and ignores it.
    double source_intensity = 1.0;
};

struct Bb84LinkResult {
    KeyMaterial user_key;   // the user's prepared bits on kept rounds
    KeyMaterial relay_key;  // the relay's measurement results on kept rounds
    std::optional<double> qber;  // nullopt when no rounds were kept
    double kept_fraction = 0.0;
    std::uint64_t rounds = 0;
    std::uint64_t kept = 0;
};

/// One decoy-free BB84 link between a user and the relay: the user prepares
/// uniform BB84 states, the relay measures in a uniform random basis, and
/// rounds are kept when the photon was detected and the bases match.
Bb84LinkResult run_bb84_link(std::string_view user, std::string_view relay,
                             const Bb84LinkConfig& cfg);

struct OtpResult {
    Bits ciphertext;
    bool truncated = false;  // set when the two keys differed in length
};

/// One-time-pad encryption of the Alice-relay key under the Bob-relay key.
OtpResult otp_forward(const Bits& key_with_alice, const Bits& key_with_bob);

/// Inverse of otp_forward given the Bob-relay key.
Bits otp_recover(const Bits& ciphertext, const Bits& key_with_bob);

/// Reruns the link at each detector efficiency (same seed) and reports
/// (eta, kept fraction) pairs.
std::vector<std::pair<double, double>> rate_scaling_bb84(
    const Bb84LinkConfig& cfg, const std::vector<double>& eta_values);

struct TrustedRelayConfig {
    std::uint64_t rounds = 1;  // per link
    ChannelModel channel_a;
    ChannelModel channel_b;
    DetectorModel detector;
    std::uint64_t seed = 0;
};

struct RelayReport {
    RelayMode mode = RelayMode::TrustedBb84;
    std::optional<double> qber_link_a;
    std::optional<double> qber_link_b;
    Bits forwarded_ciphertext;
    Bits recovered_key;  // what Bob ends up holding
    Bits alice_key;      // what Alice holds; equal to recovered_key when clean
    bool truncated = false;
    std::uint64_t key_length = 0;
};

/// End-to-end trusted-relay key delivery: two independent BB84 links followed
/// by one-time-pad forwarding of the Alice key to Bob.
RelayReport run_trusted_relay_session(const TrustedRelayConfig& cfg);

}  // namespace qkdsim
