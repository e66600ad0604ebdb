#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qkdsim::stats {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi_square_cdf(double statistic, int dof);

/// Upper-tail p-value of a chi-square statistic.
double chi_square_pvalue(double statistic, int dof);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Goodness-of-fit test of observed counts against analytic cell
/// probabilities. Cells with zero probability must hold zero counts
/// (the statistic is infinite otherwise); they do not consume a dof.
ChiSquareResult chi_square_vs_expected(std::span<const std::uint64_t> counts,
                                       std::span<const double> probs);

/// Two-sample homogeneity test. Cells empty in both samples are skipped.
ChiSquareResult chi_square_two_sample(std::span<const std::uint64_t> a,
                                      std::span<const std::uint64_t> b);

/// Standard error of an empirical rate p estimated from n trials.
double binomial_sigma(double p, std::uint64_t n);

}  // namespace qkdsim::stats
