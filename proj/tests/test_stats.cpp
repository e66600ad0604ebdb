#include <doctest.h>

#include <vector>

#include "qkdsim/random.hpp"
#include "qkdsim/stats.hpp"

using namespace qkdsim;

TEST_CASE("chi-square cdf matches reference quantiles") {
    // Textbook critical values: P(X <= q) for the given dof.
    CHECK(stats::chi_square_cdf(3.841, 1) == doctest::Approx(0.95).epsilon(1e-3));
    CHECK(stats::chi_square_cdf(5.991, 2) == doctest::Approx(0.95).epsilon(1e-3));
    CHECK(stats::chi_square_cdf(16.266, 3) ==
          doctest::Approx(0.999).epsilon(1e-3));
    CHECK(stats::chi_square_cdf(49.728, 23) ==
          doctest::Approx(0.999).epsilon(1e-3));
    CHECK(stats::chi_square_cdf(0.0, 5) == 0.0);
}

TEST_CASE("regularized gamma edge cases") {
    CHECK(stats::regularized_gamma_p(1.0, 0.0) == 0.0);
    // P(1, x) = 1 - exp(-x)
    CHECK(stats::regularized_gamma_p(1.0, 2.0) ==
          doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
    CHECK_THROWS(stats::regularized_gamma_p(0.0, 1.0));
    CHECK_THROWS(stats::regularized_gamma_p(1.0, -1.0));
}

TEST_CASE("goodness-of-fit accepts true distribution and rejects a wrong one") {
    RandomStream rng(7);
    const std::array<double, 4> probs{0.1, 0.2, 0.3, 0.4};
    std::vector<std::uint64_t> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[rng.pick(probs)];

    const std::vector<double> p_true(probs.begin(), probs.end());
    CHECK(stats::chi_square_vs_expected(counts, p_true).p_value > 0.001);

    const std::vector<double> p_wrong{0.25, 0.25, 0.25, 0.25};
    CHECK(stats::chi_square_vs_expected(counts, p_wrong).p_value < 1e-6);
}

TEST_CASE("zero-probability cell with observations is an immediate reject") {
    const std::vector<std::uint64_t> counts{10, 5, 1};
    const std::vector<double> probs{0.5, 0.5, 0.0};
    CHECK(stats::chi_square_vs_expected(counts, probs).p_value == 0.0);
}

TEST_CASE("two-sample test accepts identical generators, rejects different") {
    RandomStream rng_a(11), rng_b(12), rng_c(13);
    const std::array<double, 4> p1{0.1, 0.2, 0.3, 0.4};
    const std::array<double, 4> p2{0.4, 0.3, 0.2, 0.1};
    std::vector<std::uint64_t> a(4, 0), b(4, 0), c(4, 0);
    for (int i = 0; i < 50000; ++i) {
        ++a[rng_a.pick(p1)];
        ++b[rng_b.pick(p1)];
        ++c[rng_c.pick(p2)];
    }
    CHECK(stats::chi_square_two_sample(a, b).p_value > 0.001);
    CHECK(stats::chi_square_two_sample(a, c).p_value < 1e-9);
}

TEST_CASE("binomial sigma") {
    CHECK(stats::binomial_sigma(0.5, 0) == 0.0);
    CHECK(stats::binomial_sigma(0.25, 100000) ==
          doctest::Approx(std::sqrt(0.25 * 0.75 / 100000.0)).epsilon(1e-12));
}
