#include "qkdsim/qpv.hpp"

#include <algorithm>
#include <cmath>

#include "qkdsim/errors.hpp"

namespace qkdsim {

namespace {

// "Strictly positive" probability, with room for fp noise in the expansion.
constexpr double kConsistencyEps = 1e-9;

BellOutcome random_bell_outcome(RandomStream& rng) {
    return static_cast<BellOutcome>(rng.raw() % kBellStateCount);
}

}  // namespace

double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Geometry Geometry::line(double length, double claimed_x, double tau) {
    Geometry geom;
    geom.verifiers = {Vec2{0.0, 0.0}, Vec2{length, 0.0}};
    geom.claimed = Vec2{claimed_x, 0.0};
    geom.tau = tau;
    return geom;
}

double Geometry::dist_to_claimed(std::size_t i) const {
    return distance(verifiers.at(i), claimed);
}

bool Geometry::is_line() const {
    if (verifiers.size() != 2) return false;
    return verifiers[0].y == 0.0 && verifiers[1].y == 0.0 && claimed.y == 0.0;
}

void Geometry::validate() const {
    if (verifiers.size() < 2 || verifiers.size() > 3) {
        throw ValidationError("geometry.verifiers", "need two or three verifiers");
    }
    if (tau < 0.0) {
        throw ValidationError("geometry.timingTolerance", "must be non-negative");
    }
    if (is_line()) {
        const double lo = std::min(verifiers[0].x, verifiers[1].x);
        const double hi = std::max(verifiers[0].x, verifiers[1].x);
        if (!(claimed.x > lo && claimed.x < hi)) {
            throw ValidationError("geometry.claimedPosition",
                                  "must lie strictly between the verifiers");
        }
    }
    for (std::size_t i = 0; i < sender_count(); ++i) {
        if (dist_to_claimed(i) <= 0.0) {
            throw ValidationError("geometry.claimedPosition",
                                  "coincides with a sending verifier");
        }
    }
}

RoundSchedule schedule_round(const Geometry& geom,
                             std::optional<double> arrival_time) {
    RoundSchedule schedule;
    double max_dist = 0.0;
    for (std::size_t i = 0; i < geom.sender_count(); ++i) {
        max_dist = std::max(max_dist, geom.dist_to_claimed(i));
    }
    schedule.arrival_deadline = arrival_time.value_or(max_dist);
    for (std::size_t i = 0; i < geom.sender_count(); ++i) {
        schedule.send_times[i] = schedule.arrival_deadline - geom.dist_to_claimed(i);
    }
    return schedule;
}

bool consistency_check(BellOutcome outcome, int x0, int x1, int theta) {
    if (!is_bell(outcome)) return false;
    const auto probs = bell_outcome_probs(
        tensor(prepare_bb84(x0, theta), prepare_bb84(x1, theta)));
    return probs[static_cast<std::size_t>(outcome)] > kConsistencyEps;
}

bool verify_timing(const QpvRoundRecord& record, const Geometry& geom) {
    if (record.response_times.size() != geom.verifiers.size()) return false;
    for (std::size_t i = 0; i < geom.verifiers.size(); ++i) {
        const double expected =
            record.arrival_deadline + distance(geom.verifiers[i], geom.claimed);
        if (std::abs(record.response_times[i] - expected) > geom.tau) {
            return false;
        }
    }
    return true;
}

namespace {

// Broadcast times as produced by a device at `actual` that waits for both
// photons and answers after `delay`.
std::vector<double> response_times_from(const Geometry& geom, const Vec2& actual,
                                        const RoundSchedule& schedule,
                                        double delay) {
    double measure_time = 0.0;
    for (std::size_t i = 0; i < geom.sender_count(); ++i) {
        measure_time = std::max(
            measure_time,
            schedule.send_times[i] + distance(geom.verifiers[i], actual));
    }
    measure_time += delay;
    std::vector<double> out(geom.verifiers.size());
    for (std::size_t i = 0; i < geom.verifiers.size(); ++i) {
        out[i] = measure_time + distance(actual, geom.verifiers[i]);
    }
    return out;
}

struct SessionTally {
    QpvReport report;
    std::vector<QpvRoundRecord> records;
    bool collect = false;

    // Returns false when the session must terminate.
    bool verifier_checks(const QpvRoundRecord& record, const Geometry& geom) {
        ++report.rounds;
        if (collect) records.push_back(record);

        if (!verify_timing(record, geom)) {  // step 4
            report.timing_ok = false;
            report.aborted_step = 4;
            return false;
        }
        if (record.reported_to_v0 != record.reported_to_v1) {  // step 5
            report.consistency_ok = false;
            report.aborted_step = 5;
            return false;
        }
        if (is_bell(record.reported_to_v0)) {
            ++report.detections;
            if (!consistency_check(record.reported_to_v0, record.x0, record.x1,
                                   record.theta)) {
                ++report.errors;
            }
        }
        return true;
    }

    QpvSessionOutput finish(double threshold) {
        report.threshold = threshold;
        report.error_rate =
            report.detections > 0
                ? static_cast<double>(report.errors) /
                      static_cast<double>(report.detections)
                : 0.0;
        report.accepted = !report.aborted_step.has_value() &&
                          report.detections > 0 &&
                          report.error_rate < threshold;
        return {report, std::move(records)};
    }
};

}  // namespace

QpvSessionOutput run_qpv_session(const Geometry& geom, const ProverSpec& prover,
                                 const QpvSessionConfig& cfg) {
    geom.validate();
    RandomStream rng(cfg.seed);
    SessionTally tally;
    tally.collect = cfg.collect_records;

    const Vec2 actual = prover.kind == ProverSpec::Kind::Displaced
                            ? prover.actual
                            : geom.claimed;
    const double delay =
        prover.kind == ProverSpec::Kind::Delayed ? prover.processing_delay : 0.0;

    for (std::uint64_t r = 0; r < cfg.rounds; ++r) {
        QpvRoundRecord record;
        record.x0 = rng.bit();
        record.x1 = rng.bit();
        record.theta = rng.bit();

        const auto schedule = schedule_round(geom);
        record.send_times = schedule.send_times;
        record.arrival_deadline = schedule.arrival_deadline;

        const auto arrived0 = apply_channel(
            prepare_bb84(record.x0, record.theta), cfg.channel0, rng);
        const auto arrived1 = apply_channel(
            prepare_bb84(record.x1, record.theta), cfg.channel1, rng);

        BellOutcome announced;
        if (prover.kind == ProverSpec::Kind::RandomOutcome) {
            announced = random_bell_outcome(rng);
        } else if (arrived0 && arrived1) {
            announced = bell_measure(tensor(*arrived0, *arrived1), cfg.detector, rng);
        } else {
            announced = dark_event(cfg.detector, rng);
        }

        record.reported_to_v0 = announced;
        record.reported_to_v1 =
            prover.kind == ProverSpec::Kind::SplitReports
                ? (announced == BellOutcome::PsiPlus ? BellOutcome::PsiMinus
                                                     : BellOutcome::PsiPlus)
                : announced;
        record.response_times = response_times_from(geom, actual, schedule, delay);

        if (!tally.verifier_checks(record, geom)) break;
    }
    return tally.finish(cfg.threshold);
}

QpvSessionOutput run_entanglement_session(const Geometry& geom,
                                          const QpvSessionConfig& cfg,
                                          MeasurementOrder order) {
    geom.validate();
    RandomStream rng(cfg.seed);
    SessionTally tally;
    tally.collect = cfg.collect_records;

    for (std::uint64_t r = 0; r < cfg.rounds; ++r) {
        QpvRoundRecord record;
        record.theta = rng.bit();

        const auto schedule = schedule_round(geom);
        record.send_times = schedule.send_times;
        record.arrival_deadline = schedule.arrival_deadline;

        BellOutcome announced = BellOutcome::NoDetection;

        if (order == MeasurementOrder::BeforeSend) {
            // Measuring the kept half first collapses the flying half to a
            // BB84 state with a uniform bit; from here the round is exactly
            // prepare-and-measure.
            record.x0 = rng.bit();
            record.x1 = rng.bit();
            const auto arrived0 = apply_channel(
                prepare_bb84(record.x0, record.theta), cfg.channel0, rng);
            const auto arrived1 = apply_channel(
                prepare_bb84(record.x1, record.theta), cfg.channel1, rng);
            if (arrived0 && arrived1) {
                announced =
                    bell_measure(tensor(*arrived0, *arrived1), cfg.detector, rng);
            } else {
                announced = dark_event(cfg.detector, rng);
            }
        } else {
            // Kept halves stay unmeasured while the flying halves travel.
            // A unitary on the flying half of a Phi+ pair equals its
            // transpose on the kept half, so channel rotations are carried
            // over to the kept pair and the Bell measurement itself sees
            // halves of perfect pairs: uniform projection onto the Bell
            // basis, with the kept pair collapsing onto the projected state.
            const bool lost0 = !rng.bernoulli(cfg.channel0.transmittance);
            const bool rot0 = !lost0 && cfg.channel0.misalignment > 0.0 &&
                              rng.bernoulli(cfg.channel0.misalignment);
            const bool lost1 = !rng.bernoulli(cfg.channel1.transmittance);
            const bool rot1 = !lost1 && cfg.channel1.misalignment > 0.0 &&
                              rng.bernoulli(cfg.channel1.misalignment);

            if (lost0 || lost1) {
                announced = dark_event(cfg.detector, rng);
                record.x0 = rng.bit();  // kept halves are maximally mixed
                record.x1 = rng.bit();
            } else {
                constexpr std::array<double, 4> uniform{0.25, 0.25, 0.25, 0.25};
                const auto projected = static_cast<BellOutcome>(rng.pick(uniform));
                announced = apply_analyzer(projected, cfg.detector, rng);

                TwoQubitState kept = bell_state(projected);
                if (rot0) {
                    const double a = -cfg.channel0.error_angle;
                    kept = apply_to_qubit(
                        kept, 0,
                        {{{Complex{std::cos(a)}, Complex{-std::sin(a)}},
                          {Complex{std::sin(a)}, Complex{std::cos(a)}}}});
                }
                if (rot1) {
                    const double a = -cfg.channel1.error_angle;
                    kept = apply_to_qubit(
                        kept, 1,
                        {{{Complex{std::cos(a)}, Complex{-std::sin(a)}},
                          {Complex{std::sin(a)}, Complex{std::cos(a)}}}});
                }
                const auto bits = measure_pair_in_basis(kept, record.theta, rng);
                record.x0 = bits.first;
                record.x1 = bits.second;
            }
        }

        record.reported_to_v0 = announced;
        record.reported_to_v1 = announced;
        record.response_times =
            response_times_from(geom, geom.claimed, schedule, 0.0);

        if (!tally.verifier_checks(record, geom)) break;
    }
    return tally.finish(cfg.threshold);
}

}  // namespace qkdsim
