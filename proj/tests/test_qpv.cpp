#include <doctest.h>

#include <cmath>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/qpv.hpp"
#include "qkdsim/stats.hpp"

using namespace qkdsim;

namespace {

QpvSessionConfig qpv_config(std::uint64_t rounds, std::uint64_t seed) {
    QpvSessionConfig cfg;
    cfg.rounds = rounds;
    cfg.seed = seed;
    return cfg;
}

// Joint (x0, x1, theta, announced) histogram over 2*2*2*5 cells.
std::vector<std::uint64_t> joint_counts(const std::vector<QpvRoundRecord>& records) {
    std::vector<std::uint64_t> counts(40, 0);
    for (const auto& r : records) {
        const std::size_t bin =
            ((static_cast<std::size_t>(r.x0) * 2 + static_cast<std::size_t>(r.x1)) *
                 2 +
             static_cast<std::size_t>(r.theta)) *
                5 +
            static_cast<std::size_t>(r.reported_to_v0);
        ++counts[bin];
    }
    return counts;
}

double worst_lateness_when_displaced(double displacement) {
    auto geom = Geometry::line(2.0, 1.0);
    geom.tau = 1e9;  // observe, do not abort
    ProverSpec prover;
    prover.kind = ProverSpec::Kind::Displaced;
    prover.actual = Vec2{1.0 + displacement, 0.0};
    auto cfg = qpv_config(1, 4);
    cfg.collect_records = true;
    const auto output = run_qpv_session(geom, prover, cfg);
    const auto& record = output.records.at(0);
    double worst = 0.0;
    for (std::size_t i = 0; i < geom.verifiers.size(); ++i) {
        const double expected =
            record.arrival_deadline + distance(geom.verifiers[i], geom.claimed);
        worst = std::max(worst, record.response_times[i] - expected);
    }
    return worst;
}

}  // namespace

TEST_CASE("schedule_round light-travel arithmetic") {
    SUBCASE("symmetric layout sends simultaneously") {
        const auto geom = Geometry::line(2.0, 1.0);
        const auto schedule = schedule_round(geom, 1.0);
        CHECK(schedule.send_times[0] == doctest::Approx(0.0));
        CHECK(schedule.send_times[1] == doctest::Approx(0.0));
        CHECK(schedule.arrival_deadline == doctest::Approx(1.0));
    }

    SUBCASE("off-center claim staggers the send times") {
        const auto geom = Geometry::line(2.0, 0.5);
        const auto schedule = schedule_round(geom, 1.0);
        CHECK(schedule.send_times[0] == doctest::Approx(0.5));
        CHECK(schedule.send_times[1] == doctest::Approx(-0.5));
    }

    SUBCASE("default arrival time keeps both send times non-negative") {
        const auto geom = Geometry::line(2.0, 0.25);
        const auto schedule = schedule_round(geom);
        CHECK(schedule.arrival_deadline == doctest::Approx(1.75));
        CHECK(schedule.send_times[0] >= 0.0);
        CHECK(schedule.send_times[1] >= 0.0);
    }

    SUBCASE("equidistant planar verifiers share one send offset") {
        Geometry geom;
        geom.verifiers = {Vec2{0.0, 0.0}, Vec2{2.0, 0.0},
                          Vec2{1.0, std::sqrt(3.0)}};
        geom.claimed = Vec2{1.0, std::sqrt(3.0) / 3.0};  // circumcenter
        const auto schedule = schedule_round(geom);
        CHECK(schedule.send_times[0] ==
              doctest::Approx(schedule.send_times[1]).epsilon(1e-12));
    }
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS(Geometry::line(2.0, 0.0).validate(), ValidationError);
    CHECK_THROWS_AS(Geometry::line(2.0, 2.5).validate(), ValidationError);
    CHECK_NOTHROW(Geometry::line(2.0, 0.1).validate());
    auto geom = Geometry::line(2.0, 1.0);
    geom.tau = -1.0;
    CHECK_THROWS_AS(geom.validate(), ValidationError);
}

TEST_CASE("consistency_check against the transmitted product states") {
    // Z basis: equal bits support Phi, unequal bits support Psi.
    CHECK(!consistency_check(BellOutcome::PsiMinus, 0, 0, kBasisZ));
    CHECK(consistency_check(BellOutcome::PsiMinus, 0, 1, kBasisZ));
    CHECK(consistency_check(BellOutcome::PhiPlus, 0, 0, kBasisZ));
    // X basis: equal bits support {Phi+, Psi+}, unequal {Phi-, Psi-}.
    CHECK(!consistency_check(BellOutcome::PsiPlus, 0, 1, kBasisX));
    CHECK(consistency_check(BellOutcome::PsiMinus, 0, 1, kBasisX));
    CHECK(consistency_check(BellOutcome::PsiPlus, 1, 1, kBasisX));
    CHECK(!consistency_check(BellOutcome::NoDetection, 0, 1, kBasisZ));
}

TEST_CASE("verify_timing examples") {
    const auto geom = Geometry::line(2.0, 1.0);
    const auto schedule = schedule_round(geom);

    QpvRoundRecord record;
    record.send_times = schedule.send_times;
    record.arrival_deadline = schedule.arrival_deadline;

    SUBCASE("honest response times pass for any tolerance") {
        record.response_times = {2.0, 2.0};
        CHECK(verify_timing(record, geom));
    }

    SUBCASE("a prover at 1.2 claiming 1.0 is late at V0 by 0.4") {
        // Photon from V0 reaches 1.2 at t = 1.2; broadcast from there.
        record.response_times = {2.4, 2.0};
        CHECK(!verify_timing(record, geom));
        auto relaxed = geom;
        relaxed.tau = 0.41;
        CHECK(verify_timing(record, relaxed));
        relaxed.tau = 0.39;
        CHECK(!verify_timing(record, relaxed));
    }

    SUBCASE("uniform delay beyond tolerance fails at both verifiers") {
        record.response_times = {2.0 + 1e-6, 2.0 + 1e-6};
        CHECK(!verify_timing(record, geom));  // default tau = 1e-9
    }
}

TEST_CASE("honest noiseless sessions are error-free and accepted") {
    const auto geom = Geometry::line(2.0, 1.0);
    const auto output = run_qpv_session(geom, ProverSpec{}, qpv_config(10000, 21));
    CHECK(output.report.errors == 0);
    CHECK(output.report.error_rate == 0.0);
    CHECK(output.report.detections > 0);
    CHECK(output.report.timing_ok);
    CHECK(output.report.consistency_ok);
    CHECK(output.report.accepted);
    CHECK(!output.report.aborted_step.has_value());
}

TEST_CASE("misaligned channels give a positive error rate below threshold") {
    const auto geom = Geometry::line(2.0, 1.0);
    auto cfg = qpv_config(200000, 22);
    cfg.channel0.misalignment = 0.05;
    cfg.channel1.misalignment = 0.05;
    const auto output = run_qpv_session(geom, ProverSpec{}, cfg);
    CHECK(output.report.error_rate > 0.0);
    CHECK(output.report.error_rate < 0.25);
    CHECK(output.report.accepted);
}

TEST_CASE("uniformly random reports are rejected near fifty percent error") {
    const auto geom = Geometry::line(2.0, 1.0);
    ProverSpec prover;
    prover.kind = ProverSpec::Kind::RandomOutcome;
    const auto output = run_qpv_session(geom, prover, qpv_config(100000, 23));
    const double sigma =
        stats::binomial_sigma(0.5, output.report.detections);
    CHECK(std::abs(output.report.error_rate - 0.5) < 3.0 * sigma);
    CHECK(!output.report.accepted);
}

TEST_CASE("split reports abort the session at step 5 regardless of errors") {
    const auto geom = Geometry::line(2.0, 1.0);
    ProverSpec prover;
    prover.kind = ProverSpec::Kind::SplitReports;
    const auto output = run_qpv_session(geom, prover, qpv_config(1000, 24));
    REQUIRE(output.report.aborted_step.has_value());
    CHECK(*output.report.aborted_step == 5);
    CHECK(!output.report.consistency_ok);
    CHECK(!output.report.accepted);
    CHECK(output.report.rounds < 1000);  // terminated early
}

TEST_CASE("displaced and delayed provers abort the session at step 4") {
    const auto geom = Geometry::line(2.0, 1.0);

    ProverSpec displaced;
    displaced.kind = ProverSpec::Kind::Displaced;
    displaced.actual = Vec2{1.2, 0.0};
    const auto a = run_qpv_session(geom, displaced, qpv_config(100, 25));
    REQUIRE(a.report.aborted_step.has_value());
    CHECK(*a.report.aborted_step == 4);
    CHECK(!a.report.timing_ok);

    ProverSpec delayed;
    delayed.kind = ProverSpec::Kind::Delayed;
    delayed.processing_delay = 1e-3;
    const auto b = run_qpv_session(geom, delayed, qpv_config(100, 26));
    REQUIRE(b.report.aborted_step.has_value());
    CHECK(*b.report.aborted_step == 4);

    delayed.processing_delay = 0.0;
    const auto c = run_qpv_session(geom, delayed, qpv_config(100, 27));
    CHECK(!c.report.aborted_step.has_value());
}

TEST_CASE("worst response lateness grows strictly with displacement") {
    double previous = -1.0;
    for (double displacement : {0.02, 0.05, 0.1, 0.2, 0.3, 0.4}) {
        const double lateness = worst_lateness_when_displaced(displacement);
        CHECK(lateness > previous);
        // Waiting for the later photon then broadcasting from the true spot
        // costs twice the displacement at the far verifier.
        CHECK(lateness == doctest::Approx(2.0 * displacement).epsilon(1e-9));
        previous = lateness;
    }
}

TEST_CASE("honest error rate is independent of channel loss") {
    const auto geom = Geometry::line(2.0, 1.0);
    std::vector<double> rates;
    std::vector<std::uint64_t> detections;
    for (double transmittance : {1.0, 0.1}) {
        auto cfg = qpv_config(transmittance == 1.0 ? 100000 : 2000000, 28);
        cfg.channel0.transmittance = transmittance;
        cfg.channel1.transmittance = transmittance;
        cfg.channel0.misalignment = 0.05;
        cfg.channel1.misalignment = 0.05;
        const auto output = run_qpv_session(geom, ProverSpec{}, cfg);
        CHECK(output.report.accepted);
        rates.push_back(output.report.error_rate);
        detections.push_back(output.report.detections);
    }
    const double sigma = std::sqrt(
        rates[0] * (1 - rates[0]) / static_cast<double>(detections[0]) +
        rates[1] * (1 - rates[1]) / static_cast<double>(detections[1]));
    CHECK(std::abs(rates[0] - rates[1]) < 3.0 * sigma);
}

TEST_CASE("entanglement-based sessions") {
    const auto geom = Geometry::line(2.0, 1.0);

    SUBCASE("noiseless runs are error-free in both orderings") {
        for (auto order : {MeasurementOrder::BeforeSend,
                           MeasurementOrder::AfterBellMeasurement}) {
            const auto output =
                run_entanglement_session(geom, qpv_config(20000, 31), order);
            CHECK(output.report.error_rate == 0.0);
            CHECK(output.report.accepted);
        }
    }

    SUBCASE("verifier outcome marginals are uniform bits") {
        auto cfg = qpv_config(40000, 32);
        cfg.collect_records = true;
        const auto output = run_entanglement_session(
            geom, cfg, MeasurementOrder::AfterBellMeasurement);
        std::uint64_t ones0 = 0, ones1 = 0;
        for (const auto& r : output.records) {
            ones0 += static_cast<std::uint64_t>(r.x0);
            ones1 += static_cast<std::uint64_t>(r.x1);
        }
        const double n = static_cast<double>(output.records.size());
        const double sigma = std::sqrt(0.25 * n);
        CHECK(std::abs(static_cast<double>(ones0) - 0.5 * n) < 3.0 * sigma);
        CHECK(std::abs(static_cast<double>(ones1) - 0.5 * n) < 3.0 * sigma);
    }

    SUBCASE("announced Psi- in the Z basis pins anti-correlated outcomes") {
        auto cfg = qpv_config(20000, 33);
        cfg.collect_records = true;
        const auto output = run_entanglement_session(
            geom, cfg, MeasurementOrder::AfterBellMeasurement);
        int seen = 0;
        for (const auto& r : output.records) {
            if (r.theta == kBasisZ && r.reported_to_v0 == BellOutcome::PsiMinus) {
                CHECK(r.x0 != r.x1);
                ++seen;
            }
        }
        CHECK(seen > 100);
    }

    SUBCASE("measure-before and measure-after agree with prepare-and-measure") {
        auto cfg = qpv_config(30000, 34);
        cfg.collect_records = true;

        const auto pm = run_qpv_session(geom, ProverSpec{}, cfg);
        auto cfg_b = cfg;
        cfg_b.seed = 35;
        const auto before = run_entanglement_session(
            geom, cfg_b, MeasurementOrder::BeforeSend);
        auto cfg_a = cfg;
        cfg_a.seed = 36;
        const auto after = run_entanglement_session(
            geom, cfg_a, MeasurementOrder::AfterBellMeasurement);

        const auto pm_counts = joint_counts(pm.records);
        const auto before_counts = joint_counts(before.records);
        const auto after_counts = joint_counts(after.records);

        CHECK(stats::chi_square_two_sample(pm_counts, before_counts).p_value >
              0.001);
        CHECK(stats::chi_square_two_sample(pm_counts, after_counts).p_value >
              0.001);
        CHECK(stats::chi_square_two_sample(before_counts, after_counts).p_value >
              0.001);
    }

    SUBCASE("orderings agree under loss and misalignment too") {
        auto cfg = qpv_config(60000, 37);
        cfg.collect_records = true;
        cfg.channel0.transmittance = 0.8;
        cfg.channel0.misalignment = 0.1;
        cfg.channel1.transmittance = 0.9;
        cfg.channel1.misalignment = 0.05;

        const auto before = run_entanglement_session(
            geom, cfg, MeasurementOrder::BeforeSend);
        auto cfg_a = cfg;
        cfg_a.seed = 38;
        const auto after = run_entanglement_session(
            geom, cfg_a, MeasurementOrder::AfterBellMeasurement);
        CHECK(stats::chi_square_two_sample(joint_counts(before.records),
                                           joint_counts(after.records))
                  .p_value > 0.001);
    }
}

TEST_CASE("three-verifier layout checks timing at the listener as well") {
    Geometry geom;
    geom.verifiers = {Vec2{0.0, 0.0}, Vec2{2.0, 0.0}, Vec2{1.0, 1.0}};
    geom.claimed = Vec2{1.0, 0.25};
    geom.tau = 1e-9;
    const auto output = run_qpv_session(geom, ProverSpec{}, qpv_config(2000, 39));
    CHECK(output.report.accepted);

    // The same session with a deaf listener position argument should still
    // pass only because the prover is honest; a displaced prover must fail.
    ProverSpec displaced;
    displaced.kind = ProverSpec::Kind::Displaced;
    displaced.actual = Vec2{1.0, 0.4};
    const auto bad = run_qpv_session(geom, displaced, qpv_config(100, 40));
    REQUIRE(bad.report.aborted_step.has_value());
    CHECK(*bad.report.aborted_step == 4);
}
