#include <doctest.h>

#include <cmath>

#include "qkdsim/mdi.hpp"

using namespace qkdsim;

namespace {

MdiSessionConfig ideal_config(std::uint64_t rounds, std::uint64_t seed) {
    MdiSessionConfig cfg;
    cfg.rounds = rounds;
    cfg.seed = seed;
    cfg.detector = DetectorModel::partial_analyzer();
    return cfg;
}

}  // namespace

TEST_CASE("run_mdi_round announcement behavior") {
    SUBCASE("anti-correlated Z bits give Psi+/Psi- evenly on the full analyzer") {
        auto cfg = ideal_config(1, 0);
        cfg.detector = DetectorModel::full_analyzer();
        RandomStream rng(5);
        const int n = 100000;
        int psi_plus = 0, psi_minus = 0;
        for (int i = 0; i < n; ++i) {
            const auto round = run_mdi_round(0, kBasisZ, 1, kBasisZ, cfg, rng);
            if (round.announced == BellOutcome::PsiPlus) ++psi_plus;
            else if (round.announced == BellOutcome::PsiMinus) ++psi_minus;
            else FAIL("unexpected announcement for |01>");
        }
        const double sigma = std::sqrt(0.25 * n);
        CHECK(std::abs(psi_plus - n / 2.0) < 3.0 * sigma);
        CHECK(std::abs(psi_minus - n / 2.0) < 3.0 * sigma);
    }

    SUBCASE("equal Z bits never announce on the partial analyzer") {
        auto cfg = ideal_config(1, 0);
        RandomStream rng(6);
        for (int i = 0; i < 2000; ++i) {
            const auto round = run_mdi_round(0, kBasisZ, 0, kBasisZ, cfg, rng);
            CHECK(round.announced == BellOutcome::NoDetection);
        }
    }

    SUBCASE("an opaque channel suppresses every announcement") {
        auto cfg = ideal_config(1, 0);
        cfg.channel_a.transmittance = 0.0;
        RandomStream rng(7);
        for (int i = 0; i < 1000; ++i) {
            const auto round = run_mdi_round(0, kBasisZ, 1, kBasisZ, cfg, rng);
            CHECK(round.announced == BellOutcome::NoDetection);
        }
    }

    SUBCASE("default analyzer only ever reports Psi states or nothing") {
        auto cfg = ideal_config(1, 0);
        cfg.channel_a.misalignment = 0.3;
        cfg.channel_b.transmittance = 0.7;
        RandomStream rng(8);
        for (int i = 0; i < 4000; ++i) {
            const auto round = run_mdi_round(rng.bit(), rng.bit(), rng.bit(),
                                             rng.bit(), cfg, rng);
            CHECK((round.announced == BellOutcome::PsiPlus ||
                   round.announced == BellOutcome::PsiMinus ||
                   round.announced == BellOutcome::NoDetection));
        }
    }
}

TEST_CASE("sift applies the Bell-correlation flip rules") {
    SUBCASE("Z-basis Psi- round is kept with both key bits aligned") {
        const MdiRound round{0, kBasisZ, 1, kBasisZ, BellOutcome::PsiMinus};
        const auto kept = sift_round(round);
        REQUIRE(kept.has_value());
        CHECK(kept->key_a == 0);
        CHECK(kept->key_b == 0);
    }

    SUBCASE("basis mismatch is discarded") {
        const MdiRound round{0, kBasisZ, 1, kBasisX, BellOutcome::PsiPlus};
        CHECK(!sift_round(round).has_value());
    }

    SUBCASE("X-basis Psi+ round needs no flip") {
        const MdiRound round{1, kBasisX, 1, kBasisX, BellOutcome::PsiPlus};
        const auto kept = sift_round(round);
        REQUIRE(kept.has_value());
        CHECK(kept->key_a == 1);
        CHECK(kept->key_b == 1);
    }

    SUBCASE("no-detection and Phi announcements are discarded") {
        CHECK(!sift_round({0, 0, 1, 0, BellOutcome::NoDetection}).has_value());
        CHECK(!sift_round({0, 0, 1, 0, BellOutcome::PhiPlus}).has_value());
        CHECK(!sift_round({0, 0, 1, 0, BellOutcome::PhiMinus}).has_value());
    }

    SUBCASE("vector interface keeps exactly the matching rounds") {
        const std::vector<MdiRound> rounds{
            {0, kBasisZ, 1, kBasisZ, BellOutcome::PsiMinus},
            {0, kBasisZ, 1, kBasisX, BellOutcome::PsiPlus},
            {1, kBasisX, 1, kBasisX, BellOutcome::PsiPlus},
            {1, kBasisX, 0, kBasisX, BellOutcome::NoDetection},
        };
        const auto kept = sift(rounds);
        REQUIRE(kept.size() == 2);
        CHECK(kept[0].basis == kBasisZ);
        CHECK(kept[1].basis == kBasisX);
    }
}

TEST_CASE("estimate_errors flags empty bases instead of reporting zero") {
    const std::vector<SiftedBit> only_z{{0, 0, kBasisZ, BellOutcome::PsiMinus},
                                        {1, 0, kBasisZ, BellOutcome::PsiPlus}};
    const auto est = estimate_errors(only_z);
    REQUIRE(est.qber_z.has_value());
    CHECK(*est.qber_z == doctest::Approx(0.5));
    CHECK(!est.qber_x.has_value());

    const auto empty = estimate_errors({});
    CHECK(!empty.qber_z.has_value());
    CHECK(!empty.qber_x.has_value());
}

TEST_CASE("ideal sessions have exactly zero error in both bases") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto result = run_mdi_session(ideal_config(20000, seed));
        REQUIRE(result.qber_z.has_value());
        REQUIRE(result.qber_x.has_value());
        CHECK(*result.qber_z == 0.0);
        CHECK(*result.qber_x == 0.0);
        CHECK(result.key_a.size() == result.key_b.size());
        CHECK(result.key_a == result.key_b);
        CHECK(result.key_a.size() > 0);
    }
}

TEST_CASE("single-arm misalignment shows up as the Z-basis error rate") {
    auto cfg = ideal_config(400000, 12);
    cfg.channel_a.misalignment = 0.05;
    const auto result = run_mdi_session(cfg);
    REQUIRE(result.qber_z.has_value());
    // Detected Z rounds are equal-bit single-flip (always an error) against
    // unequal-bit no-flip, which reproduces the flip probability itself.
    const double expected = 0.05;
    const double sigma =
        std::sqrt(expected * (1.0 - expected) / static_cast<double>(result.kept_z));
    CHECK(std::abs(*result.qber_z - expected) < 3.0 * sigma);
}

TEST_CASE("session keys always have equal length") {
    RandomStream seeds(31);
    for (int i = 0; i < 5; ++i) {
        auto cfg = ideal_config(5000, seeds.raw());
        cfg.channel_a.transmittance = 0.5 + 0.5 * seeds.uniform();
        cfg.channel_b.misalignment = 0.2 * seeds.uniform();
        cfg.detector.efficiency = 0.3 + 0.7 * seeds.uniform();
        const auto result = run_mdi_session(cfg);
        CHECK(result.key_a.size() == result.key_b.size());
    }
}

TEST_CASE("partial analyzer gain never exceeds the full analyzer on the same seed") {
    for (std::uint64_t seed : {100ull, 101ull, 102ull}) {
        auto partial = ideal_config(30000, seed);
        partial.detector = DetectorModel::partial_analyzer(0.8);
        auto full = ideal_config(30000, seed);
        full.detector = DetectorModel::full_analyzer(0.8);
        const auto g_partial = run_mdi_session(partial).gain;
        const auto g_full = run_mdi_session(full).gain;
        CHECK(g_partial <= g_full);
    }
}

TEST_CASE("gain scales with the square of detector efficiency") {
    auto cfg = ideal_config(1000000, 2718);

    SUBCASE("halving eta quarters the gain") {
        const auto table = gain_scaling(cfg, {0.1, 0.2, 0.5, 1.0});
        const double g01 = table[0].second;
        const double g02 = table[1].second;
        const double g05 = table[2].second;
        const double g10 = table[3].second;
        CHECK(g02 / g01 == doctest::Approx(4.0).epsilon(0.05));
        CHECK(g10 / g05 == doctest::Approx(4.0).epsilon(0.05));
    }

    SUBCASE("zero efficiency means zero gain") {
        cfg.rounds = 10000;
        cfg.detector.efficiency = 0.0;
        CHECK(run_mdi_session(cfg).gain == 0.0);
    }

    SUBCASE("least-squares fit to c * eta^2 has small relative residuals") {
        const std::vector<double> etas{0.125, 0.25, 0.5, 1.0};
        const auto table = gain_scaling(cfg, etas);
        double num = 0.0, den = 0.0;
        for (const auto& [eta, gain] : table) {
            num += gain * eta * eta;
            den += eta * eta * eta * eta;
        }
        const double c = num / den;
        for (const auto& [eta, gain] : table) {
            const double fit = c * eta * eta;
            CHECK(std::abs(gain - fit) / fit < 0.05);
        }
    }
}
