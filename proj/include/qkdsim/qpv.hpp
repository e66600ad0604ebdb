#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qkdsim/quantum.hpp"
#include "qkdsim/random.hpp"

namespace qkdsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

/// Verifier/prover layout with unit light speed. The first two verifiers
/// send photons; every verifier listens for the broadcast result. A third
/// verifier extends the timing triangulation to the plane.
struct Geometry {
    std::vector<Vec2> verifiers;
    Vec2 claimed;
    double tau = 1e-9;  // timing tolerance, in time units

    /// Collinear layout: V0 at 0, V1 at `length`, prover claim in between.
    static Geometry line(double length, double claimed_x, double tau = 1e-9);

    std::size_t sender_count() const { return 2; }
    double dist_to_claimed(std::size_t i) const;
    bool is_line() const;

    /// Throws ValidationError on a malformed layout.
    void validate() const;
};

struct RoundSchedule {
    std::array<double, 2> send_times{};  // one per sending verifier
    double arrival_deadline = 0.0;       // common photon arrival time
};

/// Send times that make both photons reach the claimed position together.
/// Without an explicit arrival time the earliest feasible one (send at
/// t >= 0 on both arms) is used.
RoundSchedule schedule_round(const Geometry& geom,
                             std::optional<double> arrival_time = std::nullopt);

/// An announced outcome is consistent when the transmitted product state
/// assigns it strictly positive Bell-projection probability.
bool consistency_check(BellOutcome outcome, int x0, int x1, int theta);

struct QpvRoundRecord {
    int x0 = 0;
    int x1 = 0;
    int theta = 0;
    std::array<double, 2> send_times{};
    double arrival_deadline = 0.0;
    std::vector<double> response_times;  // one per verifier
    BellOutcome reported_to_v0 = BellOutcome::NoDetection;
    BellOutcome reported_to_v1 = BellOutcome::NoDetection;
};

/// True when every verifier heard the broadcast at the moment a prover at
/// the claimed position would have produced it, within tau.
bool verify_timing(const QpvRoundRecord& record, const Geometry& geom);

/// What the party at the measurement point actually does each round.
struct ProverSpec {
    enum class Kind {
        Honest,        // measure at the claimed position, broadcast at once
        Displaced,     // honest device at `actual`, still claiming `claimed`
        RandomOutcome, // broadcast a uniformly random Bell state every round
        SplitReports,  // send different results to V0 and V1
        Delayed,       // honest plus a fixed processing delay
    };
    Kind kind = Kind::Honest;
    Vec2 actual{};
    double processing_delay = 0.0;
};

struct QpvSessionConfig {
    std::uint64_t rounds = 1;
    ChannelModel channel0;
    ChannelModel channel1;
    DetectorModel detector;
    double threshold = 0.25;
    std::uint64_t seed = 0;
    bool collect_records = false;
};

struct QpvReport {
    std::uint64_t rounds = 0;      // rounds executed (fewer than configured on abort)
    std::uint64_t detections = 0;  // rounds with an announced Bell state
    std::uint64_t errors = 0;
    double error_rate = 0.0;  // errors / detections, 0 when nothing detected
    bool timing_ok = true;
    bool consistency_ok = true;
    bool accepted = false;
    double threshold = 0.25;
    std::optional<int> aborted_step;  // 4 = timing, 5 = cross-verifier mismatch
};

struct QpvSessionOutput {
    QpvReport report;
    std::vector<QpvRoundRecord> records;  // filled when collect_records is set
};

/// Prepare-and-measure protocol session.
QpvSessionOutput run_qpv_session(const Geometry& geom, const ProverSpec& prover,
                                 const QpvSessionConfig& cfg);

/// Whether the verifiers measure their kept EPR halves before sending the
/// flying halves or only after the broadcast. The joint statistics are the
/// same either way; both orderings exist so that can be demonstrated.
enum class MeasurementOrder { BeforeSend, AfterBellMeasurement };

/// Entanglement-based variant: each verifier keeps half of a Phi+ pair and
/// sends the other half; the kept halves are measured in the joint basis.
/// Recorded x0/x1 are those measurement results.
QpvSessionOutput run_entanglement_session(const Geometry& geom,
                                          const QpvSessionConfig& cfg,
                                          MeasurementOrder order);

}  // namespace qkdsim
