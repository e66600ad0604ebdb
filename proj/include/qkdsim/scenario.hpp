#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qkdsim/adversary.hpp"
#include "qkdsim/mdi.hpp"
#include "qkdsim/qpv.hpp"
#include "qkdsim/quantum.hpp"
#include "qkdsim/relay.hpp"

namespace qkdsim {

enum class ScenarioKind : int {
    Mdi,
    Bb84Relay,
    RateCompare,
    QpvHonest,
    QpvLocc,
    QpvEpr,
    QpvBound,
    QpvEquivalence,
};

std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_kind_from_string(const std::string& name);

/// Which verifier measurement orderings a qpv-equivalence run exercises.
enum class EquivalenceOrdering : int { Before, After, Both };

/// A fully resolved, validated simulation request. Everything the engines
/// need is pinned here, including the seed, so a Scenario determines its
/// report byte for byte.
struct Scenario {
    ScenarioKind kind = ScenarioKind::Mdi;
    std::uint64_t seed = 0;
    std::uint64_t rounds = 10000;

    ChannelModel channel_a;  // channel0 for the qpv kinds
    ChannelModel channel_b;  // channel1 for the qpv kinds
    DetectorModel detector;
    double threshold = 0.25;

    Geometry geometry = Geometry::line(2.0, 1.0);
    ProverSpec prover;

    // qpv-locc
    std::optional<AttackState> attack_state;
    BellOutcome locc_reported = BellOutcome::PsiMinus;
    bool locc_random_guess = false;
    std::optional<double> adversary0_x;
    std::optional<double> adversary1_x;

    // qpv-epr
    BellOutcome epr_designated = BellOutcome::PsiPlus;

    // qpv-bound
    std::uint64_t budget = 10000;
    std::optional<double> grid_resolution;

    // rate-compare
    std::vector<double> eta_values;

    // qpv-equivalence
    EquivalenceOrdering ordering = EquivalenceOrdering::Both;
};

/// Loads and validates a scenario file. `override_seed` (from --seed) beats
/// the file's seed; `fallback_seed` (from QKDSIM_SEED) covers a file without
/// one. A scenario that still has no seed is rejected.
Scenario parse_scenario(const std::filesystem::path& path,
                        std::optional<std::uint64_t> override_seed = std::nullopt,
                        std::optional<std::uint64_t> fallback_seed = std::nullopt);

/// Same, from already-parsed JSON.
Scenario parse_scenario_json(const nlohmann::json& doc,
                             std::optional<std::uint64_t> override_seed = std::nullopt,
                             std::optional<std::uint64_t> fallback_seed = std::nullopt);

/// The resolved scenario as it is embedded in every report.
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);

struct RunResult {
    nlohmann::ordered_json report;
    bool aborted = false;  // a protocol step terminated the session
};

/// Dispatches to the protocol engines and wraps the outcome in the report
/// envelope (schemaVersion, kind, scenario, result, wallClockSeconds).
RunResult run_scenario(const Scenario& scenario);

enum class ReportFormat : int { Json, Csv };

/// Flat CSV view of a report: sweep kinds get one row per sweep point,
/// everything else a single summary row.
std::string report_to_csv(const nlohmann::ordered_json& report);

/// Writes the report to `path` ("-" or empty means stdout).
void emit_report(const nlohmann::ordered_json& report, ReportFormat format,
                 const std::string& path);

}  // namespace qkdsim
