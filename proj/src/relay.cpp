#include "qkdsim/relay.hpp"

#include <algorithm>

#include "qkdsim/random.hpp"

namespace qkdsim {

std::string to_string(RelayMode mode) {
    return mode == RelayMode::UntrustedMdi ? "UntrustedMdi" : "TrustedBb84";
}

Bb84LinkResult run_bb84_link(std::string_view user, std::string_view relay,
                             const Bb84LinkConfig& cfg) {
    RandomStream rng(cfg.seed);
    Bb84LinkResult result;
    result.rounds = cfg.rounds;
    result.user_key.owner_a = std::string(user);
    result.user_key.owner_b = std::string(relay);
    result.relay_key.owner_a = std::string(user);
    result.relay_key.owner_b = std::string(relay);

    std::uint64_t disagreements = 0;
    for (std::uint64_t i = 0; i < cfg.rounds; ++i) {
        const int bit = rng.bit();
        const int basis = rng.bit();
        const int relay_basis = rng.bit();

        const auto arrived =
            apply_channel(prepare_bb84(bit, basis), cfg.channel, rng);
        // Single photon, single detector: one efficiency factor. Drawn
        // unconditionally to keep the stream aligned across loss settings.
        const bool click = rng.bernoulli(cfg.detector.efficiency);
        if (!arrived || !click) continue;

        const int measured = measure_in_basis(*arrived, relay_basis, rng);
        if (relay_basis != basis) continue;

        result.user_key.bits.push_back(static_cast<std::uint8_t>(bit));
        result.relay_key.bits.push_back(static_cast<std::uint8_t>(measured));
        disagreements += bit != measured ? 1 : 0;
    }

    result.kept = result.user_key.bits.size();
    result.kept_fraction = cfg.rounds > 0
                               ? static_cast<double>(result.kept) /
                                     static_cast<double>(cfg.rounds)
                               : 0.0;
    if (result.kept > 0) {
        result.qber = static_cast<double>(disagreements) /
                      static_cast<double>(result.kept);
    }
    return result;
}

OtpResult otp_forward(const Bits& key_with_alice, const Bits& key_with_bob) {
    OtpResult result;
    const std::size_t n = std::min(key_with_alice.size(), key_with_bob.size());
    result.truncated = key_with_alice.size() != key_with_bob.size();
    result.ciphertext.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.ciphertext.push_back(
            static_cast<std::uint8_t>((key_with_alice[i] ^ key_with_bob[i]) & 1u));
    }
    return result;
}

Bits otp_recover(const Bits& ciphertext, const Bits& key_with_bob) {
    const std::size_t n = std::min(ciphertext.size(), key_with_bob.size());
    Bits plain;
    plain.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        plain.push_back(
            static_cast<std::uint8_t>((ciphertext[i] ^ key_with_bob[i]) & 1u));
    }
    return plain;
}

std::vector<std::pair<double, double>> rate_scaling_bb84(
    const Bb84LinkConfig& cfg, const std::vector<double>& eta_values) {
    std::vector<std::pair<double, double>> table;
    table.reserve(eta_values.size());
    for (double eta : eta_values) {
        Bb84LinkConfig point = cfg;
        point.detector.efficiency = eta;
        table.emplace_back(eta, run_bb84_link("user", "relay", point).kept_fraction);
    }
    return table;
}

RelayReport run_trusted_relay_session(const TrustedRelayConfig& cfg) {
    Relay relay(RelayMode::TrustedBb84);
    RelayReport report;
    report.mode = relay.mode();

    Bb84LinkConfig link_a{cfg.rounds, cfg.channel_a, cfg.detector, cfg.seed};
    Bb84LinkConfig link_b{cfg.rounds, cfg.channel_b, cfg.detector, cfg.seed + 1};
    const auto a = run_bb84_link("alice", "relay", link_a);
    const auto b = run_bb84_link("bob", "relay", link_b);

    report.qber_link_a = a.qber;
    report.qber_link_b = b.qber;

    // The relay pads the key it shares with Alice using the key it shares
    // with Bob; Bob strips the pad to recover Alice's key.
    const auto otp = otp_forward(a.relay_key.bits, b.relay_key.bits);
    report.forwarded_ciphertext = otp.ciphertext;
    report.truncated = otp.truncated;
    report.recovered_key = otp_recover(otp.ciphertext, b.user_key.bits);

    report.alice_key = a.user_key.bits;
    report.alice_key.resize(
        std::min(report.alice_key.size(), report.recovered_key.size()));
    report.key_length = report.recovered_key.size();
    return report;
}

}  // namespace qkdsim
