#include "qkdsim/mdi.hpp"

namespace qkdsim {

MdiRound run_mdi_round(int bit_a, int basis_a, int bit_b, int basis_b,
                       const MdiSessionConfig& cfg, RandomStream& rng) {
    MdiRound round{bit_a, basis_a, bit_b, basis_b, BellOutcome::NoDetection};

    const auto sent_a =
        apply_channel(prepare_bb84(bit_a, basis_a), cfg.channel_a, rng);
    const auto sent_b =
        apply_channel(prepare_bb84(bit_b, basis_b), cfg.channel_b, rng);

    if (sent_a && sent_b) {
        round.announced = bell_measure(tensor(*sent_a, *sent_b), cfg.detector, rng);
    } else {
        round.announced = dark_event(cfg.detector, rng);
    }
    return round;
}

std::optional<SiftedBit> sift_round(const MdiRound& round) {
    if (round.basis_a != round.basis_b) return std::nullopt;
    if (round.announced != BellOutcome::PsiPlus &&
        round.announced != BellOutcome::PsiMinus) {
        return std::nullopt;
    }
    const bool flip = round.basis_a == kBasisZ ||
                      round.announced == BellOutcome::PsiMinus;
    return SiftedBit{round.bit_a, flip ? 1 - round.bit_b : round.bit_b,
                     round.basis_a, round.announced};
}

std::vector<SiftedBit> sift(const std::vector<MdiRound>& rounds) {
    std::vector<SiftedBit> kept;
    for (const auto& round : rounds) {
        if (auto bit = sift_round(round)) kept.push_back(*bit);
    }
    return kept;
}

ErrorEstimate estimate_errors(const std::vector<SiftedBit>& sifted) {
    std::uint64_t kept_z = 0, kept_x = 0, errors_z = 0, errors_x = 0;
    for (const auto& s : sifted) {
        const bool error = s.key_a != s.key_b;
        if (s.basis == kBasisZ) {
            ++kept_z;
            errors_z += error ? 1 : 0;
        } else {
            ++kept_x;
            errors_x += error ? 1 : 0;
        }
    }
    ErrorEstimate estimate;
    if (kept_z > 0) {
        estimate.qber_z = static_cast<double>(errors_z) / static_cast<double>(kept_z);
    }
    if (kept_x > 0) {
        estimate.qber_x = static_cast<double>(errors_x) / static_cast<double>(kept_x);
    }
    return estimate;
}

MdiSessionResult run_mdi_session(const MdiSessionConfig& cfg) {
    RandomStream rng(cfg.seed);
    MdiSessionResult result;
    result.rounds = cfg.rounds;

    for (std::uint64_t i = 0; i < cfg.rounds; ++i) {
        const int bit_a = rng.bit();
        const int basis_a = rng.bit();
        const int bit_b = rng.bit();
        const int basis_b = rng.bit();
        const MdiRound round =
            run_mdi_round(bit_a, basis_a, bit_b, basis_b, cfg, rng);

        if (is_bell(round.announced)) ++result.coincidences;

        if (const auto kept = sift_round(round)) {
            result.key_a.push_back(static_cast<std::uint8_t>(kept->key_a));
            result.key_b.push_back(static_cast<std::uint8_t>(kept->key_b));
            const bool error = kept->key_a != kept->key_b;
            if (kept->basis == kBasisZ) {
                ++result.kept_z;
                result.errors_z += error ? 1 : 0;
            } else {
                ++result.kept_x;
                result.errors_x += error ? 1 : 0;
            }
        }
    }

    if (result.kept_z > 0) {
        result.qber_z = static_cast<double>(result.errors_z) /
                        static_cast<double>(result.kept_z);
    }
    if (result.kept_x > 0) {
        result.qber_x = static_cast<double>(result.errors_x) /
                        static_cast<double>(result.kept_x);
    }
    result.gain = cfg.rounds > 0 ? static_cast<double>(result.coincidences) /
                                       static_cast<double>(cfg.rounds)
                                 : 0.0;
    return result;
}

std::vector<std::pair<double, double>> gain_scaling(
    const MdiSessionConfig& cfg, const std::vector<double>& eta_values) {
    std::vector<std::pair<double, double>> table;
    table.reserve(eta_values.size());
    for (double eta : eta_values) {
        MdiSessionConfig point = cfg;
        point.detector.efficiency = eta;
        table.emplace_back(eta, run_mdi_session(point).gain);
    }
    return table;
}

}  // namespace qkdsim
