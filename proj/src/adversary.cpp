#include "qkdsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/stats.hpp"

namespace qkdsim {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

bool AttackState::is_normalized(double tol) const {
    return std::abs(std::norm(alpha0) + std::norm(beta0) - 1.0) <= tol &&
           std::abs(std::norm(alpha1) + std::norm(beta1) - 1.0) <= tol;
}

AttackState AttackState::from_angles(double t0, double phi0, double t1,
                                     double phi1) {
    return AttackState{
        Complex{std::cos(t0), 0.0},
        std::polar(std::sin(t0), phi0),
        Complex{std::cos(t1), 0.0},
        std::polar(std::sin(t1), phi1),
    };
}

AttackState AttackState::orthogonal_pair() {
    return AttackState{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};
}

double error_rate_z(const AttackState& a) {
    return std::norm(a.alpha0 * a.alpha1) + std::norm(a.beta0 * a.beta1);
}

double error_rate_x(const AttackState& a) {
    return 0.25 * (std::norm((a.alpha0 + a.beta0) * (a.alpha1 + a.beta1)) +
                   std::norm((a.alpha0 - a.beta0) * (a.alpha1 - a.beta1)));
}

double avg_error_rate(const AttackState& a) {
    const double cross_same =
        std::norm(a.alpha0 * a.alpha1 + a.beta0 * a.beta1);
    const double cross_conj =
        std::norm(a.alpha0 * std::conj(a.alpha1) + a.beta0 * std::conj(a.beta1));
    return 0.25 * (1.0 + cross_same + cross_conj);
}

namespace {

double objective(const std::array<double, 4>& angles) {
    return avg_error_rate(
        AttackState::from_angles(angles[0], angles[1], angles[2], angles[3]));
}

// Plain Nelder-Mead on the four angles. Returns when the simplex collapses
// or the evaluation budget runs out.
struct NelderMeadOutcome {
    std::array<double, 4> best{};
    double value = 1.0;
    bool converged = false;
    std::uint64_t evaluations = 0;
};

NelderMeadOutcome nelder_mead(std::array<double, 4> start,
                              std::uint64_t budget) {
    constexpr int n = 4;
    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    constexpr double f_tol = 1e-13;

    NelderMeadOutcome out;
    std::array<std::array<double, 4>, n + 1> simplex;
    std::array<double, n + 1> values;

    simplex[0] = start;
    for (int i = 0; i < n; ++i) {
        simplex[i + 1] = start;
        simplex[i + 1][i] += 0.25;
    }
    for (int i = 0; i <= n; ++i) {
        if (out.evaluations >= budget) return out;
        values[i] = objective(simplex[i]);
        ++out.evaluations;
    }

    while (out.evaluations < budget) {
        std::array<int, n + 1> order{0, 1, 2, 3, 4};
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return values[a] < values[b]; });

        out.best = simplex[order[0]];
        out.value = values[order[0]];
        if (values[order[n]] - values[order[0]] < f_tol) {
            out.converged = true;
            return out;
        }

        std::array<double, 4> centroid{};
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 4; ++d) centroid[d] += simplex[order[i]][d] / n;

        auto blend = [&](double t) {
            std::array<double, 4> p;
            for (int d = 0; d < 4; ++d)
                p[d] = centroid[d] + t * (centroid[d] - simplex[order[n]][d]);
            return p;
        };

        const auto reflected = blend(alpha);
        const double f_reflected = objective(reflected);
        ++out.evaluations;

        if (f_reflected < values[order[0]]) {
            const auto expanded = blend(gamma);
            const double f_expanded = objective(expanded);
            ++out.evaluations;
            if (f_expanded < f_reflected) {
                simplex[order[n]] = expanded;
                values[order[n]] = f_expanded;
            } else {
                simplex[order[n]] = reflected;
                values[order[n]] = f_reflected;
            }
            continue;
        }
        if (f_reflected < values[order[n - 1]]) {
            simplex[order[n]] = reflected;
            values[order[n]] = f_reflected;
            continue;
        }

        const auto contracted = blend(-rho);
        const double f_contracted = objective(contracted);
        ++out.evaluations;
        if (f_contracted < values[order[n]]) {
            simplex[order[n]] = contracted;
            values[order[n]] = f_contracted;
            continue;
        }

        for (int i = 1; i <= n; ++i) {
            for (int d = 0; d < 4; ++d) {
                simplex[order[i]][d] =
                    simplex[order[0]][d] +
                    sigma * (simplex[order[i]][d] - simplex[order[0]][d]);
            }
            if (out.evaluations >= budget) return out;
            values[order[i]] = objective(simplex[order[i]]);
            ++out.evaluations;
        }
    }

    return out;
}

}  // namespace

MinimizeResult minimize_avg_error(std::uint64_t search_budget,
                                  std::uint64_t seed) {
    RandomStream rng(seed);
    MinimizeResult result;
    result.minimum = 1.0;

    // Spread the budget over restarts; 400 evaluations comfortably converge
    // one Nelder-Mead run on this smooth 4d objective.
    const std::uint64_t per_start = 400;
    while (result.evaluations < search_budget) {
        const std::uint64_t budget =
            std::min<std::uint64_t>(per_start, search_budget - result.evaluations);
        const std::array<double, 4> start{
            rng.uniform() * (kPi / 2.0), rng.uniform() * 2.0 * kPi,
            rng.uniform() * (kPi / 2.0), rng.uniform() * 2.0 * kPi};
        const auto run = nelder_mead(start, budget);
        result.evaluations += run.evaluations;
        if (run.value < result.minimum) {
            result.minimum = run.value;
            result.state = AttackState::from_angles(run.best[0], run.best[1],
                                                    run.best[2], run.best[3]);
        }
        result.converged = result.converged || run.converged;
    }
    return result;
}

GridSearchResult grid_min_avg_error(double resolution) {
    if (resolution <= 0.0) {
        throw ValidationError("gridResolution", "must be positive");
    }
    const std::size_t n_t =
        static_cast<std::size_t>(std::llround(kPi / 2.0 / resolution)) + 1;
    const std::size_t n_phi =
        static_cast<std::size_t>(std::llround(2.0 * kPi / resolution));

    // Flattened sphere points: alpha real, beta complex.
    struct Point {
        double a;
        double b_re;
        double b_im;
    };
    std::vector<Point> points;
    points.reserve(n_t * n_phi);
    for (std::size_t it = 0; it < n_t; ++it) {
        const double t = std::min(static_cast<double>(it) * resolution, kPi / 2.0);
        const double c = std::cos(t);
        const double s = std::sin(t);
        for (std::size_t ip = 0; ip < n_phi; ++ip) {
            const double phi = static_cast<double>(ip) * resolution;
            points.push_back({c, s * std::cos(phi), s * std::sin(phi)});
        }
    }

    double best = 1.0;
    std::size_t best0 = 0, best1 = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point p = points[i];
        for (std::size_t j = 0; j < points.size(); ++j) {
            const Point& q = points[j];
            const double aa = p.a * q.a;
            // |alpha0 alpha1 + beta0 beta1|^2
            const double re1 = aa + p.b_re * q.b_re - p.b_im * q.b_im;
            const double im1 = p.b_re * q.b_im + p.b_im * q.b_re;
            // |alpha0 conj(alpha1) + beta0 conj(beta1)|^2
            const double re2 = aa + p.b_re * q.b_re + p.b_im * q.b_im;
            const double im2 = p.b_im * q.b_re - p.b_re * q.b_im;
            const double value =
                0.25 * (1.0 + re1 * re1 + im1 * im1 + re2 * re2 + im2 * im2);
            if (value < best) {
                best = value;
                best0 = i;
                best1 = j;
            }
        }
    }

    GridSearchResult result;
    result.minimum = best;
    result.evaluations =
        static_cast<std::uint64_t>(points.size()) * points.size();
    const Point& p = points[best0];
    const Point& q = points[best1];
    result.state = AttackState{Complex{p.a}, Complex{p.b_re, p.b_im},
                               Complex{q.a}, Complex{q.b_re, q.b_im}};
    return result;
}

LoccStrategy LoccStrategy::post_selected(const AttackState& target,
                                         BellOutcome designated) {
    LoccStrategy s;
    s.target = target;
    s.designated = designated;
    return s;
}

LoccStrategy LoccStrategy::random_guess() {
    LoccStrategy s;
    s.guess_uniformly = true;
    return s;
}

AdversaryTiming adversary_timing(const Geometry& geom, double e0_x, double e1_x) {
    AdversaryTiming timing;
    timing.positions = {e0_x, e1_x};

    const auto schedule = schedule_round(geom);
    const double v0 = geom.verifiers[0].x;
    const double v1 = geom.verifiers[1].x;
    const double gap = std::abs(e1_x - e0_x);

    const double intercept0 = schedule.send_times[0] + std::abs(e0_x - v0);
    const double intercept1 = schedule.send_times[1] + std::abs(v1 - e1_x);

    // Each interceptor can answer only once both classical results are in.
    const double ready0 = std::max(intercept0, intercept1 + gap);
    const double ready1 = std::max(intercept1, intercept0 + gap);

    const double arrive0 = ready0 + std::abs(e0_x - v0);
    const double arrive1 = ready1 + std::abs(v1 - e1_x);

    timing.lateness = {
        arrive0 - (schedule.arrival_deadline + geom.dist_to_claimed(0)),
        arrive1 - (schedule.arrival_deadline + geom.dist_to_claimed(1))};
    timing.feasible = timing.lateness[0] <= geom.tau &&
                      timing.lateness[1] <= geom.tau;
    return timing;
}

namespace {

struct AttackPlacement {
    double e0_x;
    double e1_x;
    AdversaryTiming timing;
};

AttackPlacement resolve_placement(const Geometry& geom,
                                  const AttackSimConfig& cfg) {
    geom.validate();
    if (!geom.is_line()) {
        throw ValidationError("geometry",
                              "interceptor simulations require the collinear "
                              "two-verifier layout");
    }
    AttackPlacement placement;
    placement.e0_x =
        cfg.adversary0_x.value_or(0.5 * (geom.verifiers[0].x + geom.claimed.x));
    placement.e1_x =
        cfg.adversary1_x.value_or(0.5 * (geom.verifiers[1].x + geom.claimed.x));
    placement.timing = adversary_timing(geom, placement.e0_x, placement.e1_x);
    if (!placement.timing.feasible) {
        throw ValidationError(
            "adversaryPositions",
            "classical exchange cannot reach the verifiers on time from "
            "this placement");
    }
    return placement;
}

AttackReport finish_report(AttackReport report) {
    report.detection_rate =
        report.rounds > 0 ? static_cast<double>(report.detections) /
                                static_cast<double>(report.rounds)
                          : 0.0;
    report.empirical_er =
        report.detections > 0 ? static_cast<double>(report.errors) /
                                    static_cast<double>(report.detections)
                              : 0.0;
    report.er_half_width =
        3.0 * stats::binomial_sigma(report.empirical_er, report.detections);
    return report;
}

}  // namespace

AttackReport simulate_locc_attack(const LoccStrategy& strategy,
                                  const Geometry& geom,
                                  const AttackSimConfig& cfg) {
    if (strategy.target && !strategy.target->is_normalized(1e-9)) {
        throw ValidationError("attack.target", "amplitudes must be unit-norm");
    }
    const auto placement = resolve_placement(geom, cfg);

    AttackReport report;
    report.adversary_positions = {placement.e0_x, placement.e1_x};
    report.response_lateness = placement.timing.lateness;
    if (strategy.target) {
        report.analytic_er_z = error_rate_z(*strategy.target);
        report.analytic_er_x = error_rate_x(*strategy.target);
        report.analytic_er = avg_error_rate(*strategy.target);
    }

    RandomStream rng(cfg.seed);
    report.rounds = cfg.rounds;

    for (std::uint64_t r = 0; r < cfg.rounds; ++r) {
        const int theta = rng.bit();

        const bool arrived0 = rng.bernoulli(cfg.channel0.transmittance);
        const bool rot0 = arrived0 && cfg.channel0.misalignment > 0.0 &&
                          rng.bernoulli(cfg.channel0.misalignment);
        const bool arrived1 = rng.bernoulli(cfg.channel1.transmittance);
        const bool rot1 = arrived1 && cfg.channel1.misalignment > 0.0 &&
                          rng.bernoulli(cfg.channel1.misalignment);

        BellOutcome announced = BellOutcome::NoDetection;
        int x0, x1;

        if (strategy.target) {
            // Projecting the flying half onto the (rotated) target's
            // conjugate succeeds with probability 1/2 and steers the kept
            // photon into the target state; a rotation en route lands on the
            // kept side transposed.
            const bool ok0 = arrived0 && rng.bernoulli(0.5);
            const bool ok1 = arrived1 && rng.bernoulli(0.5);
            if (ok0 && ok1) {
                QubitState kept0{strategy.target->alpha0, strategy.target->beta0};
                QubitState kept1{strategy.target->alpha1, strategy.target->beta1};
                if (rot0) kept0 = rotate(kept0, -cfg.channel0.error_angle);
                if (rot1) kept1 = rotate(kept1, -cfg.channel1.error_angle);
                x0 = measure_in_basis(kept0, theta, rng);
                x1 = measure_in_basis(kept1, theta, rng);
                announced = strategy.designated;
            } else {
                x0 = rng.bit();
                x1 = rng.bit();
            }
        } else {
            // Uniform guessing: computational-basis measurements on whatever
            // arrived, then a random Bell state announced every round.
            QubitState kept0{1.0, 0.0};
            QubitState kept1{1.0, 0.0};
            if (arrived0) {
                kept0 = rng.bit() ? QubitState{0.0, 1.0} : QubitState{1.0, 0.0};
                if (rot0) kept0 = rotate(kept0, -cfg.channel0.error_angle);
                x0 = measure_in_basis(kept0, theta, rng);
            } else {
                x0 = rng.bit();
            }
            if (arrived1) {
                kept1 = rng.bit() ? QubitState{0.0, 1.0} : QubitState{1.0, 0.0};
                if (rot1) kept1 = rotate(kept1, -cfg.channel1.error_angle);
                x1 = measure_in_basis(kept1, theta, rng);
            } else {
                x1 = rng.bit();
            }
            announced = static_cast<BellOutcome>(rng.raw() % kBellStateCount);
        }

        if (is_bell(announced)) {
            ++report.detections;
            if (!consistency_check(announced, x0, x1, theta)) ++report.errors;
        }
    }
    return finish_report(report);
}

AttackReport simulate_epr_attack(const Geometry& geom,
                                 const AttackSimConfig& cfg) {
    const auto placement = resolve_placement(geom, cfg);
    const TwoQubitState shared = bell_state(cfg.designated);

    AttackReport report;
    report.adversary_positions = {placement.e0_x, placement.e1_x};
    report.response_lateness = placement.timing.lateness;

    RandomStream rng(cfg.seed);
    report.rounds = cfg.rounds;

    for (std::uint64_t r = 0; r < cfg.rounds; ++r) {
        const int x0 = rng.bit();
        const int x1 = rng.bit();
        const int theta = rng.bit();

        const auto arrived0 =
            apply_channel(prepare_bb84(x0, theta), cfg.channel0, rng);
        const auto arrived1 =
            apply_channel(prepare_bb84(x1, theta), cfg.channel1, rng);

        BellOutcome announced = BellOutcome::NoDetection;
        if (arrived0 && arrived1) {
            // E0's Bell measurement on (intercepted photon, her pair half)
            // teleports the photon state, Pauli-twisted by the outcome, onto
            // E1's half. chi[k] below is the unnormalized state left there.
            std::array<std::array<Complex, 2>, kBellStateCount> chi{};
            std::array<double, kBellStateCount> probs{};
            for (std::size_t b = 0; b < kBellStateCount; ++b) {
                const auto bell = bell_state(static_cast<BellOutcome>(b));
                for (int k = 0; k < 2; ++k) {
                    Complex sum = 0.0;
                    for (int i = 0; i < 2; ++i) {
                        const Complex psi_i = i == 0 ? arrived0->amp0 : arrived0->amp1;
                        for (int j = 0; j < 2; ++j) {
                            sum += std::conj(bell.amps[2 * i + j]) * psi_i *
                                   shared.amps[2 * j + k];
                        }
                    }
                    chi[b][k] = sum;
                }
                probs[b] = std::norm(chi[b][0]) + std::norm(chi[b][1]);
            }

            const auto b0 = rng.pick(probs);
            const double norm = std::sqrt(probs[b0]);
            const QubitState teleported{chi[b0][0] / norm, chi[b0][1] / norm};

            const auto probs1 = bell_outcome_probs(tensor(teleported, *arrived1));
            const auto b1 = rng.pick(probs1);

            if (static_cast<BellOutcome>(b0) == cfg.designated &&
                static_cast<BellOutcome>(b1) == cfg.designated) {
                announced = cfg.designated;
            }
        }

        if (is_bell(announced)) {
            ++report.detections;
            if (!consistency_check(announced, x0, x1, theta)) ++report.errors;
        }
    }
    return finish_report(report);
}

}  // namespace qkdsim
