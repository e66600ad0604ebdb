#include "qkdsim/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qkdsim::stats {

namespace {

// Series expansion of P(a, x), reliable for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), reliable for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi_square_cdf(double statistic, int dof) {
    if (dof <= 0) throw std::invalid_argument("chi_square_cdf: dof must be positive");
    if (statistic <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * dof, 0.5 * statistic);
}

double chi_square_pvalue(double statistic, int dof) {
    return 1.0 - chi_square_cdf(statistic, dof);
}

ChiSquareResult chi_square_vs_expected(std::span<const std::uint64_t> counts,
                                       std::span<const double> probs) {
    if (counts.size() != probs.size()) {
        throw std::invalid_argument("chi_square_vs_expected: size mismatch");
    }
    std::uint64_t total = 0;
    for (auto c : counts) total += c;

    double statistic = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (probs[i] <= 0.0) {
            if (counts[i] > 0) {
                return {std::numeric_limits<double>::infinity(),
                        std::max(1, cells), 0.0};
            }
            continue;
        }
        double expected = probs[i] * static_cast<double>(total);
        double diff = static_cast<double>(counts[i]) - expected;
        statistic += diff * diff / expected;
        ++cells;
    }
    if (cells < 2 || total == 0) return {statistic, std::max(1, cells - 1), 1.0};
    int dof = cells - 1;
    return {statistic, dof, chi_square_pvalue(statistic, dof)};
}

ChiSquareResult chi_square_two_sample(std::span<const std::uint64_t> a,
                                      std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("chi_square_two_sample: size mismatch");
    }
    double total_a = 0.0, total_b = 0.0;
    for (auto v : a) total_a += static_cast<double>(v);
    for (auto v : b) total_b += static_cast<double>(v);
    if (total_a == 0.0 || total_b == 0.0) return {0.0, 1, 1.0};

    const double ka = std::sqrt(total_b / total_a);
    const double kb = std::sqrt(total_a / total_b);
    double statistic = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double na = static_cast<double>(a[i]);
        double nb = static_cast<double>(b[i]);
        if (na + nb == 0.0) continue;
        double diff = ka * na - kb * nb;
        statistic += diff * diff / (na + nb);
        ++cells;
    }
    if (cells < 2) return {statistic, 1, 1.0};
    int dof = cells - 1;
    return {statistic, dof, chi_square_pvalue(statistic, dof)};
}

double binomial_sigma(double p, std::uint64_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace qkdsim::stats
