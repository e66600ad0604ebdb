#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "qkdsim/qpv.hpp"
#include "qkdsim/quantum.hpp"

namespace qkdsim {

/// The product state a colluding pair can steer the verifiers' kept photons
/// into: (alpha0|0> + beta0|1>) on the V0 side, (alpha1|0> + beta1|1>) on
/// the V1 side. Each pair of amplitudes is unit-norm.
struct AttackState {
    Complex alpha0{1.0, 0.0};
    Complex beta0{0.0, 0.0};
    Complex alpha1{1.0, 0.0};
    Complex beta1{0.0, 0.0};

    bool is_normalized(double tol = 1e-12) const;

    /// Phase-aware sphere coordinates: alpha_i = cos(t_i),
    /// beta_i = sin(t_i) e^{i phi_i}. Global phases are fixed real-positive.
    static AttackState from_angles(double t0, double phi0, double t1, double phi1);

    /// The zero-cross-term pair |0> (x) |1>: the canonical minimizer.
    static AttackState orthogonal_pair();
};

/// Probability that both verifiers see the same bit in the computational
/// basis, where the announced anti-correlated state demands opposite bits.
double error_rate_z(const AttackState& a);

/// Same-result probability in the diagonal basis.
double error_rate_x(const AttackState& a);

/// Basis-averaged error rate in closed form; equals the mean of the two
/// per-basis rates.
double avg_error_rate(const AttackState& a);

struct MinimizeResult {
    AttackState state;
    double minimum = 1.0;
    bool converged = false;
    std::uint64_t evaluations = 0;
};

/// Multi-start Nelder-Mead over the four sphere angles. `search_budget`
/// caps objective evaluations; an unconverged search reports converged =
/// false rather than pretending the returned value is tight.
MinimizeResult minimize_avg_error(std::uint64_t search_budget,
                                  std::uint64_t seed = 1);

struct GridSearchResult {
    AttackState state;
    double minimum = 1.0;
    std::uint64_t evaluations = 0;
};

/// Independent brute-force route to the same minimum: enumerates the four
/// angles on a grid with the given spacing (radians) and keeps the smallest
/// average error rate.
GridSearchResult grid_min_avg_error(double resolution);

/// A colluding measure-and-report recipe. Two families are implemented:
///  - post-selected: the pair declares a target AttackState; each round both
///    intercepted halves are measured against it and, when both projections
///    succeed, the designated Bell state is reported (otherwise no
///    detection). Success leaves the verifiers' kept photons exactly in the
///    target product state.
///  - uniform guessing: measure in the computational basis and report a
///    uniformly random Bell state every round.
/// Reports always go identically to both verifiers.
struct LoccStrategy {
    std::optional<AttackState> target;
    BellOutcome designated = BellOutcome::PsiMinus;
    bool guess_uniformly = false;

    static LoccStrategy post_selected(const AttackState& target,
                                      BellOutcome designated = BellOutcome::PsiMinus);
    static LoccStrategy random_guess();
};

struct AttackSimConfig {
    std::uint64_t rounds = 1;
    ChannelModel channel0;
    ChannelModel channel1;
    double threshold = 0.25;
    std::uint64_t seed = 0;
    // 1D positions of the interceptors; default midpoints between each
    // verifier and the claimed position (the exactly-feasible placement).
    std::optional<double> adversary0_x;
    std::optional<double> adversary1_x;
    // Bell state reported by the entanglement-swapping attack, which also
    // fixes the state of the pre-shared pair.
    BellOutcome designated = BellOutcome::PsiPlus;
};

struct AttackReport {
    std::optional<double> analytic_er_z;
    std::optional<double> analytic_er_x;
    std::optional<double> analytic_er;
    double empirical_er = 0.0;
    double er_half_width = 0.0;  // 3-sigma binomial half-width
    double detection_rate = 0.0;
    std::uint64_t rounds = 0;
    std::uint64_t detections = 0;
    std::uint64_t errors = 0;
    bool step5_abort = false;
    std::array<double, 2> adversary_positions{};
    std::array<double, 2> response_lateness{};  // worst-case, per verifier
};

/// Timing bookkeeping for two interceptors who must exchange classical
/// results before answering. Lateness is how far behind the honest response
/// time each verifier hears the broadcast; feasible placements have
/// lateness within tau on both sides.
struct AdversaryTiming {
    std::array<double, 2> positions{};
    std::array<double, 2> lateness{};
    bool feasible = false;
};

AdversaryTiming adversary_timing(const Geometry& geom, double e0_x, double e1_x);

/// Runs the entanglement-based protocol against the given LOCC strategy.
/// Throws ValidationError when the interceptor placement cannot meet the
/// timing checks.
AttackReport simulate_locc_attack(const LoccStrategy& strategy,
                                  const Geometry& geom,
                                  const AttackSimConfig& cfg);

/// Runs the prepare-and-measure protocol against the pre-shared-pair
/// entanglement-swapping attack (the case the protocol cannot detect).
AttackReport simulate_epr_attack(const Geometry& geom, const AttackSimConfig& cfg);

}  // namespace qkdsim
