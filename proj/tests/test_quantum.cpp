#include <doctest.h>

#include <cmath>
#include <vector>

#include "qkdsim/quantum.hpp"
#include "qkdsim/stats.hpp"
#include "test_helpers.hpp"

using namespace qkdsim;
using qkdsim::testing::bell_probs_oracle;
using qkdsim::testing::random_two_qubit;

namespace {

const double kR = 1.0 / std::sqrt(2.0);

}  // namespace

TEST_CASE("prepare_bb84 produces the four BB84 states") {
    const auto z0 = prepare_bb84(0, kBasisZ);
    CHECK(z0.amp0 == Complex{1.0});
    CHECK(z0.amp1 == Complex{0.0});

    const auto z1 = prepare_bb84(1, kBasisZ);
    CHECK(z1.amp0 == Complex{0.0});
    CHECK(z1.amp1 == Complex{1.0});

    const auto plus = prepare_bb84(0, kBasisX);
    CHECK(plus.amp0.real() == doctest::Approx(kR).epsilon(1e-15));
    CHECK(plus.amp1.real() == doctest::Approx(kR).epsilon(1e-15));

    const auto minus = prepare_bb84(1, kBasisX);
    CHECK(minus.amp0.real() == doctest::Approx(kR).epsilon(1e-15));
    CHECK(minus.amp1.real() == doctest::Approx(-kR).epsilon(1e-15));

    for (int bit : {0, 1}) {
        for (int basis : {0, 1}) {
            CHECK(prepare_bb84(bit, basis).is_normalized());
        }
    }
}

TEST_CASE("tensor products of basis and diagonal states") {
    const auto ket01 = tensor(prepare_bb84(0, kBasisZ), prepare_bb84(1, kBasisZ));
    CHECK(ket01.amps[0] == Complex{0.0});
    CHECK(ket01.amps[1] == Complex{1.0});
    CHECK(ket01.amps[2] == Complex{0.0});
    CHECK(ket01.amps[3] == Complex{0.0});

    const auto plus_plus =
        tensor(prepare_bb84(0, kBasisX), prepare_bb84(0, kBasisX));
    for (const auto& a : plus_plus.amps) {
        CHECK(a.real() == doctest::Approx(0.5).epsilon(1e-15));
    }

    const auto plus_minus =
        tensor(prepare_bb84(0, kBasisX), prepare_bb84(1, kBasisX));
    CHECK(plus_minus.amps[0].real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(plus_minus.amps[1].real() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(plus_minus.amps[2].real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(plus_minus.amps[3].real() == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("bell_outcome_probs on frozen product states") {
    // Expected values computed with the explicit-vector oracle below.
    const auto p01 =
        bell_outcome_probs(tensor(prepare_bb84(0, kBasisZ), prepare_bb84(1, kBasisZ)));
    CHECK(p01[static_cast<int>(BellOutcome::PsiPlus)] == doctest::Approx(0.5));
    CHECK(p01[static_cast<int>(BellOutcome::PsiMinus)] == doctest::Approx(0.5));
    CHECK(p01[static_cast<int>(BellOutcome::PhiPlus)] == doctest::Approx(0.0));
    CHECK(p01[static_cast<int>(BellOutcome::PhiMinus)] == doctest::Approx(0.0));

    const auto p00 =
        bell_outcome_probs(tensor(prepare_bb84(0, kBasisZ), prepare_bb84(0, kBasisZ)));
    CHECK(p00[static_cast<int>(BellOutcome::PhiPlus)] == doctest::Approx(0.5));
    CHECK(p00[static_cast<int>(BellOutcome::PhiMinus)] == doctest::Approx(0.5));
    CHECK(p00[static_cast<int>(BellOutcome::PsiPlus)] == doctest::Approx(0.0));
    CHECK(p00[static_cast<int>(BellOutcome::PsiMinus)] == doctest::Approx(0.0));

    const auto ppp =
        bell_outcome_probs(tensor(prepare_bb84(0, kBasisX), prepare_bb84(0, kBasisX)));
    CHECK(ppp[static_cast<int>(BellOutcome::PhiPlus)] == doctest::Approx(0.5));
    CHECK(ppp[static_cast<int>(BellOutcome::PsiPlus)] == doctest::Approx(0.5));
    CHECK(ppp[static_cast<int>(BellOutcome::PhiMinus)] == doctest::Approx(0.0));
    CHECK(ppp[static_cast<int>(BellOutcome::PsiMinus)] == doctest::Approx(0.0));
}

TEST_CASE("bell_outcome_probs matches the explicit-vector oracle on all "
          "computational/diagonal products") {
    for (int bit0 : {0, 1}) {
        for (int basis0 : {0, 1}) {
            for (int bit1 : {0, 1}) {
                for (int basis1 : {0, 1}) {
                    const auto s = tensor(prepare_bb84(bit0, basis0),
                                          prepare_bb84(bit1, basis1));
                    const auto fast = bell_outcome_probs(s);
                    const auto slow = bell_probs_oracle(s);
                    for (int k = 0; k < 4; ++k) {
                        CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-12));
                    }
                }
            }
        }
    }
}

TEST_CASE("bell_outcome_probs sums to one on random states") {
    RandomStream rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_two_qubit(rng);
        const auto probs = bell_outcome_probs(s);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);

        const auto oracle = bell_probs_oracle(s);
        for (int k = 0; k < 4; ++k) {
            CHECK(probs[k] == doctest::Approx(oracle[k]).epsilon(1e-10));
        }
    }
}

TEST_CASE("normalization is preserved by preparation, tensor, and channels") {
    RandomStream rng(99);
    const ChannelModel noisy{1.0, 0.35, 0.7};
    for (int i = 0; i < 2000; ++i) {
        const auto q = qkdsim::testing::random_qubit(rng);
        CHECK(q.is_normalized());
        const auto out = apply_channel(q, noisy, rng);
        REQUIRE(out.has_value());
        CHECK(out->is_normalized());
        const auto pair = tensor(q, *out);
        CHECK(pair.is_normalized());
    }
}

TEST_CASE("bell_measure respects the analyzer configuration") {
    const auto ket00 = tensor(prepare_bb84(0, 0), prepare_bb84(0, 0));
    const auto ket01 = tensor(prepare_bb84(0, 0), prepare_bb84(1, 0));

    SUBCASE("states with zero Psi probability never announce on the partial "
            "analyzer") {
        RandomStream rng(1);
        const auto det = DetectorModel::partial_analyzer();
        for (int i = 0; i < 2000; ++i) {
            CHECK(bell_measure(ket00, det, rng) == BellOutcome::NoDetection);
        }
    }

    SUBCASE("anti-correlated Z input splits evenly between the Psi outcomes") {
        RandomStream rng(2);
        const auto det = DetectorModel::full_analyzer();
        const int n = 100000;
        int psi_plus = 0, psi_minus = 0;
        for (int i = 0; i < n; ++i) {
            const auto outcome = bell_measure(ket01, det, rng);
            if (outcome == BellOutcome::PsiPlus) ++psi_plus;
            else if (outcome == BellOutcome::PsiMinus) ++psi_minus;
            else FAIL("unexpected outcome on |01>");
        }
        const double sigma = std::sqrt(0.25 * n);  // binomial, p = 1/2
        CHECK(std::abs(psi_plus - n / 2.0) < 3.0 * sigma);
        CHECK(std::abs(psi_minus - n / 2.0) < 3.0 * sigma);
    }

    SUBCASE("zero efficiency never announces") {
        RandomStream rng(3);
        const auto det = DetectorModel::full_analyzer(0.0);
        for (int i = 0; i < 1000; ++i) {
            CHECK(bell_measure(ket01, det, rng) == BellOutcome::NoDetection);
        }
    }

    SUBCASE("dark counts substitute a resolvable outcome") {
        RandomStream rng(4);
        DetectorModel det = DetectorModel::partial_analyzer();
        det.dark_count_rate = 1.0;
        for (int i = 0; i < 500; ++i) {
            const auto outcome = bell_measure(ket00, det, rng);
            CHECK((outcome == BellOutcome::PsiPlus ||
                   outcome == BellOutcome::PsiMinus));
        }
    }
}

TEST_CASE("bell_measure frequencies match the analytic distribution") {
    RandomStream state_rng(555);
    const auto det = DetectorModel::full_analyzer();
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = random_two_qubit(state_rng);
        const auto probs = bell_outcome_probs(s);

        RandomStream rng(1000 + trial);
        std::vector<std::uint64_t> counts(4, 0);
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto outcome = bell_measure(s, det, rng);
            REQUIRE(is_bell(outcome));
            ++counts[static_cast<std::size_t>(outcome)];
        }
        const std::vector<double> expected(probs.begin(), probs.end());
        const auto test = stats::chi_square_vs_expected(counts, expected);
        CHECK(test.p_value > 0.001);
    }
}

TEST_CASE("apply_channel loss, identity, and rotation behavior") {
    RandomStream rng(42);
    const auto q = prepare_bb84(0, kBasisZ);

    SUBCASE("identity channel returns the state unchanged") {
        const ChannelModel ideal;
        for (int i = 0; i < 100; ++i) {
            const auto out = apply_channel(q, ideal, rng);
            REQUIRE(out.has_value());
            CHECK(out->amp0 == q.amp0);
            CHECK(out->amp1 == q.amp1);
        }
    }

    SUBCASE("zero transmittance always loses the photon") {
        const ChannelModel opaque{0.0, 0.0, 1.5707963267948966};
        for (int i = 0; i < 100; ++i) {
            CHECK(!apply_channel(q, opaque, rng).has_value());
        }
    }

    SUBCASE("certain misalignment at a quarter turn flips |0> to |1>") {
        const ChannelModel flipper{1.0, 1.0, 1.5707963267948966};
        const auto out = apply_channel(q, flipper, rng);
        REQUIRE(out.has_value());
        CHECK(std::norm(out->amp1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::norm(out->amp0) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("single-qubit and pair measurements") {
    RandomStream rng(77);

    SUBCASE("definite states measure deterministically") {
        CHECK(measure_in_basis(prepare_bb84(1, kBasisZ), kBasisZ, rng) == 1);
        CHECK(measure_in_basis(prepare_bb84(0, kBasisZ), kBasisZ, rng) == 0);
        CHECK(measure_in_basis(prepare_bb84(1, kBasisX), kBasisX, rng) == 1);
        CHECK(measure_in_basis(prepare_bb84(0, kBasisX), kBasisX, rng) == 0);
    }

    SUBCASE("Psi- anti-correlates in both bases") {
        const auto psi_minus = bell_state(BellOutcome::PsiMinus);
        for (int basis : {kBasisZ, kBasisX}) {
            for (int i = 0; i < 500; ++i) {
                const auto [b0, b1] = measure_pair_in_basis(psi_minus, basis, rng);
                CHECK(b0 != b1);
            }
        }
    }

    SUBCASE("Phi+ correlates in both bases") {
        const auto phi_plus = bell_state(BellOutcome::PhiPlus);
        for (int basis : {kBasisZ, kBasisX}) {
            for (int i = 0; i < 500; ++i) {
                const auto [b0, b1] = measure_pair_in_basis(phi_plus, basis, rng);
                CHECK(b0 == b1);
            }
        }
    }
}

TEST_CASE("apply_to_qubit acts on the addressed slot only") {
    // X on the left slot of |00> gives |10>; on the right slot |01>.
    const std::array<std::array<Complex, 2>, 2> pauli_x{
        {{Complex{0.0}, Complex{1.0}}, {Complex{1.0}, Complex{0.0}}}};
    TwoQubitState ket00;
    ket00.amps = {Complex{1.0}, 0.0, 0.0, 0.0};

    const auto left = apply_to_qubit(ket00, 0, pauli_x);
    CHECK(left.amps[2] == Complex{1.0});
    const auto right = apply_to_qubit(ket00, 1, pauli_x);
    CHECK(right.amps[1] == Complex{1.0});
}
