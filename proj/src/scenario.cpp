#include "qkdsim/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qkdsim/errors.hpp"
#include "qkdsim/stats.hpp"

namespace qkdsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Mdi: return "mdi";
        case ScenarioKind::Bb84Relay: return "bb84-relay";
        case ScenarioKind::RateCompare: return "rate-compare";
        case ScenarioKind::QpvHonest: return "qpv-honest";
        case ScenarioKind::QpvLocc: return "qpv-locc";
        case ScenarioKind::QpvEpr: return "qpv-epr";
        case ScenarioKind::QpvBound: return "qpv-bound";
        case ScenarioKind::QpvEquivalence: return "qpv-equivalence";
    }
    return "mdi";
}

std::optional<ScenarioKind> scenario_kind_from_string(const std::string& name) {
    if (name == "mdi") return ScenarioKind::Mdi;
    if (name == "bb84-relay") return ScenarioKind::Bb84Relay;
    if (name == "rate-compare") return ScenarioKind::RateCompare;
    if (name == "qpv-honest") return ScenarioKind::QpvHonest;
    if (name == "qpv-locc") return ScenarioKind::QpvLocc;
    if (name == "qpv-epr") return ScenarioKind::QpvEpr;
    if (name == "qpv-bound") return ScenarioKind::QpvBound;
    if (name == "qpv-equivalence") return ScenarioKind::QpvEquivalence;
    return std::nullopt;
}

namespace {

constexpr double kDegToRad = 0.017453292519943295;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ValidationError(field, message);
}

std::string join_field(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) {
            fail(join_field(where, item.key()), "unknown field");
        }
    }
}

double number_field(const json& obj, const std::string& where,
                    const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) fail(join_field(where, key), "must be a number");
    return obj.at(key).get<double>();
}

double unit_interval_field(const json& obj, const std::string& where,
                           const std::string& key, double fallback) {
    const double v = number_field(obj, where, key, fallback);
    if (v < 0.0 || v > 1.0) fail(join_field(where, key), "must lie in [0, 1]");
    return v;
}

ChannelModel parse_channel(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    reject_unknown_keys(obj, where,
                        {"transmittance", "misalignment", "errorAngleDeg"});
    ChannelModel ch;
    ch.transmittance = unit_interval_field(obj, where, "transmittance", 1.0);
    ch.misalignment = unit_interval_field(obj, where, "misalignment", 0.0);
    ch.error_angle =
        number_field(obj, where, "errorAngleDeg", 90.0) * kDegToRad;
    return ch;
}

DetectorModel parse_detector(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    reject_unknown_keys(obj, where,
                        {"efficiency", "darkCountRate", "detectableOutcomes"});
    DetectorModel det;
    det.efficiency = unit_interval_field(obj, where, "efficiency", 1.0);
    det.dark_count_rate =
        unit_interval_field(obj, where, "darkCountRate", 0.0);
    if (obj.contains("detectableOutcomes")) {
        const auto& list = obj.at("detectableOutcomes");
        if (!list.is_array()) {
            fail(where + ".detectableOutcomes", "must be an array");
        }
        det.detectable = {false, false, false, false};
        for (const auto& entry : list) {
            if (!entry.is_string()) {
                fail(where + ".detectableOutcomes", "entries must be strings");
            }
            const auto outcome = bell_outcome_from_string(entry.get<std::string>());
            if (!outcome || !is_bell(*outcome)) {
                fail(where + ".detectableOutcomes",
                     "'" + entry.get<std::string>() + "' is not a Bell state");
            }
            det.detectable[static_cast<std::size_t>(*outcome)] = true;
        }
    }
    return det;
}

BellOutcome parse_bell_outcome(const json& obj, const std::string& where,
                               const std::string& key, BellOutcome fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) fail(join_field(where, key), "must be a string");
    const auto outcome = bell_outcome_from_string(obj.at(key).get<std::string>());
    if (!outcome || !is_bell(*outcome)) {
        fail(join_field(where, key), "must name one of the four Bell states");
    }
    return *outcome;
}

Vec2 parse_point(const json& value, const std::string& where) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
        !value[1].is_number()) {
        fail(where, "must be a [x, y] pair");
    }
    return Vec2{value[0].get<double>(), value[1].get<double>()};
}

Geometry parse_geometry(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    Geometry geom;
    if (obj.contains("verifiers") || obj.contains("claimed")) {
        reject_unknown_keys(obj, where, {"verifiers", "claimed", "timingTolerance"});
        if (!obj.contains("verifiers") || !obj.at("verifiers").is_array()) {
            fail(where + ".verifiers", "must be an array of [x, y] pairs");
        }
        geom.verifiers.clear();
        std::size_t i = 0;
        for (const auto& v : obj.at("verifiers")) {
            geom.verifiers.push_back(
                parse_point(v, where + ".verifiers[" + std::to_string(i) + "]"));
            ++i;
        }
        if (!obj.contains("claimed")) fail(where + ".claimed", "required");
        geom.claimed = parse_point(obj.at("claimed"), where + ".claimed");
    } else {
        reject_unknown_keys(obj, where,
                            {"length", "claimedPosition", "timingTolerance"});
        const double length = number_field(obj, where, "length", 2.0);
        if (length <= 0.0) fail(where + ".length", "must be positive");
        const double claimed =
            number_field(obj, where, "claimedPosition", length / 2.0);
        geom = Geometry::line(length, claimed);
    }
    geom.tau = number_field(obj, where, "timingTolerance", 1e-9);
    geom.validate();  // throws ValidationError with geometry.* field names
    return geom;
}

Complex parse_amplitude(const json& obj, const std::string& where,
                        const std::string& key) {
    if (!obj.contains(key)) fail(join_field(where, key), "required");
    const auto& value = obj.at(key);
    if (value.is_number()) return Complex{value.get<double>(), 0.0};
    if (value.is_array() && value.size() == 2 && value[0].is_number() &&
        value[1].is_number()) {
        return Complex{value[0].get<double>(), value[1].get<double>()};
    }
    fail(join_field(where, key), "must be a number or [re, im] pair");
}

ProverSpec parse_prover(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    reject_unknown_keys(obj, where, {"kind", "actualPosition", "processingDelay"});
    ProverSpec prover;
    std::string kind = "honest";
    if (obj.contains("kind")) {
        if (!obj.at("kind").is_string()) fail(where + ".kind", "must be a string");
        kind = obj.at("kind").get<std::string>();
    }
    if (kind == "honest") {
        prover.kind = ProverSpec::Kind::Honest;
    } else if (kind == "displaced") {
        prover.kind = ProverSpec::Kind::Displaced;
        if (!obj.contains("actualPosition")) {
            fail(where + ".actualPosition", "required for a displaced prover");
        }
    } else if (kind == "random") {
        prover.kind = ProverSpec::Kind::RandomOutcome;
    } else if (kind == "splitReports") {
        prover.kind = ProverSpec::Kind::SplitReports;
    } else if (kind == "delayed") {
        prover.kind = ProverSpec::Kind::Delayed;
    } else {
        fail(where + ".kind", "unknown prover kind '" + kind + "'");
    }
    if (obj.contains("actualPosition")) {
        const auto& pos = obj.at("actualPosition");
        if (pos.is_number()) {
            prover.actual = Vec2{pos.get<double>(), 0.0};
        } else {
            prover.actual = parse_point(pos, where + ".actualPosition");
        }
    }
    prover.processing_delay =
        number_field(obj, where, "processingDelay", 0.0);
    if (prover.processing_delay < 0.0) {
        fail(where + ".processingDelay", "must be non-negative");
    }
    return prover;
}

std::set<std::string> allowed_top_level_keys(ScenarioKind kind) {
    std::set<std::string> keys{"kind", "seed", "rounds"};
    switch (kind) {
        case ScenarioKind::Mdi:
            keys.insert({"channelA", "channelB", "detector"});
            break;
        case ScenarioKind::Bb84Relay:
            keys.insert({"channelA", "channelB", "detector"});
            break;
        case ScenarioKind::RateCompare:
            keys.insert({"channelA", "channelB", "detector", "etaValues"});
            break;
        case ScenarioKind::QpvHonest:
            keys.insert({"channel0", "channel1", "detector", "geometry",
                         "threshold", "prover"});
            break;
        case ScenarioKind::QpvLocc:
            keys.insert({"channel0", "channel1", "geometry", "threshold",
                         "attack", "adversaryPositions"});
            break;
        case ScenarioKind::QpvEpr:
            keys.insert({"channel0", "channel1", "geometry", "threshold",
                         "designated", "adversaryPositions"});
            break;
        case ScenarioKind::QpvBound:
            keys.insert({"budget", "gridResolution"});
            break;
        case ScenarioKind::QpvEquivalence:
            keys.insert({"channel0", "channel1", "detector", "geometry",
                         "threshold", "ordering"});
            break;
    }
    return keys;
}

}  // namespace

Scenario parse_scenario_json(const json& doc,
                             std::optional<std::uint64_t> override_seed,
                             std::optional<std::uint64_t> fallback_seed) {
    if (!doc.is_object()) fail("scenario", "must be a JSON object");
    if (!doc.contains("kind") || !doc.at("kind").is_string()) {
        fail("kind", "required string field");
    }
    const auto kind = scenario_kind_from_string(doc.at("kind").get<std::string>());
    if (!kind) {
        fail("kind", "unknown scenario kind '" +
                         doc.at("kind").get<std::string>() + "'");
    }

    Scenario scenario;
    scenario.kind = *kind;
    reject_unknown_keys(doc, "", allowed_top_level_keys(*kind));

    if (override_seed) {
        scenario.seed = *override_seed;
    } else if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) {
            fail("seed", "must be a non-negative integer");
        }
        scenario.seed = doc.at("seed").get<std::uint64_t>();
    } else if (fallback_seed) {
        scenario.seed = *fallback_seed;
    } else {
        fail("seed", "required (set it in the file, via --seed, or QKDSIM_SEED)");
    }

    if (doc.contains("rounds")) {
        if (!doc.at("rounds").is_number_unsigned() ||
            doc.at("rounds").get<std::uint64_t>() == 0) {
            fail("rounds", "must be a positive integer");
        }
        scenario.rounds = doc.at("rounds").get<std::uint64_t>();
    }

    const bool qpv_naming = scenario.kind == ScenarioKind::QpvHonest ||
                            scenario.kind == ScenarioKind::QpvLocc ||
                            scenario.kind == ScenarioKind::QpvEpr ||
                            scenario.kind == ScenarioKind::QpvEquivalence;
    const std::string ch_a = qpv_naming ? "channel0" : "channelA";
    const std::string ch_b = qpv_naming ? "channel1" : "channelB";
    if (doc.contains(ch_a)) scenario.channel_a = parse_channel(doc.at(ch_a), ch_a);
    if (doc.contains(ch_b)) scenario.channel_b = parse_channel(doc.at(ch_b), ch_b);
    if (doc.contains("detector")) {
        scenario.detector = parse_detector(doc.at("detector"), "detector");
    }
    if (doc.contains("threshold")) {
        scenario.threshold = number_field(doc, "", "threshold", 0.25);
        if (scenario.threshold <= 0.0 || scenario.threshold > 1.0) {
            fail("threshold", "must lie in (0, 1]");
        }
    }
    if (doc.contains("geometry")) {
        scenario.geometry = parse_geometry(doc.at("geometry"), "geometry");
    }
    if (doc.contains("prover")) {
        scenario.prover = parse_prover(doc.at("prover"), "prover");
    }

    if (scenario.kind == ScenarioKind::QpvLocc) {
        if (!doc.contains("attack")) fail("attack", "required for qpv-locc");
        const auto& attack = doc.at("attack");
        if (!attack.is_object()) fail("attack", "must be an object");
        reject_unknown_keys(attack, "attack",
                            {"strategy", "alpha0", "beta0", "alpha1", "beta1",
                             "reported"});
        std::string strategy = "postSelected";
        if (attack.contains("strategy")) {
            if (!attack.at("strategy").is_string()) {
                fail("attack.strategy", "must be a string");
            }
            strategy = attack.at("strategy").get<std::string>();
        }
        scenario.locc_reported = parse_bell_outcome(attack, "attack", "reported",
                                                    BellOutcome::PsiMinus);
        if (strategy == "randomGuess") {
            scenario.locc_random_guess = true;
        } else if (strategy == "postSelected") {
            AttackState state;
            state.alpha0 = parse_amplitude(attack, "attack", "alpha0");
            state.beta0 = parse_amplitude(attack, "attack", "beta0");
            state.alpha1 = parse_amplitude(attack, "attack", "alpha1");
            state.beta1 = parse_amplitude(attack, "attack", "beta1");
            if (!state.is_normalized(1e-6)) {
                fail("attack", "each (alpha, beta) pair must be unit-norm");
            }
            // Tidy up hand-entered constants.
            const double n0 =
                std::sqrt(std::norm(state.alpha0) + std::norm(state.beta0));
            const double n1 =
                std::sqrt(std::norm(state.alpha1) + std::norm(state.beta1));
            state.alpha0 /= n0;
            state.beta0 /= n0;
            state.alpha1 /= n1;
            state.beta1 /= n1;
            scenario.attack_state = state;
        } else {
            fail("attack.strategy", "unknown strategy '" + strategy + "'");
        }
    }

    if (doc.contains("adversaryPositions")) {
        const auto& positions = doc.at("adversaryPositions");
        if (!positions.is_array() || positions.size() != 2 ||
            !positions[0].is_number() || !positions[1].is_number()) {
            fail("adversaryPositions", "must be [e0, e1] x coordinates");
        }
        scenario.adversary0_x = positions[0].get<double>();
        scenario.adversary1_x = positions[1].get<double>();
    }

    if (scenario.kind == ScenarioKind::QpvEpr) {
        scenario.epr_designated =
            parse_bell_outcome(doc, "", "designated", BellOutcome::PsiPlus);
    }

    if (scenario.kind == ScenarioKind::QpvBound) {
        if (doc.contains("budget")) {
            if (!doc.at("budget").is_number_unsigned() ||
                doc.at("budget").get<std::uint64_t>() == 0) {
                fail("budget", "must be a positive integer");
            }
            scenario.budget = doc.at("budget").get<std::uint64_t>();
        }
        if (doc.contains("gridResolution")) {
            const double res = number_field(doc, "", "gridResolution", 0.0);
            if (res <= 0.0) fail("gridResolution", "must be positive");
            scenario.grid_resolution = res;
        }
    }

    if (scenario.kind == ScenarioKind::RateCompare) {
        if (doc.contains("etaValues")) {
            const auto& values = doc.at("etaValues");
            if (!values.is_array()) fail("etaValues", "must be an array");
            for (const auto& v : values) {
                if (!v.is_number()) fail("etaValues", "entries must be numbers");
                const double eta = v.get<double>();
                if (eta <= 0.0 || eta > 1.0) {
                    fail("etaValues", "entries must lie in (0, 1]");
                }
                scenario.eta_values.push_back(eta);
            }
        } else {
            scenario.eta_values = {0.125, 0.25, 0.5, 1.0};
        }
    }

    if (scenario.kind == ScenarioKind::QpvEquivalence && doc.contains("ordering")) {
        if (!doc.at("ordering").is_string()) fail("ordering", "must be a string");
        const auto name = doc.at("ordering").get<std::string>();
        if (name == "before") {
            scenario.ordering = EquivalenceOrdering::Before;
        } else if (name == "after") {
            scenario.ordering = EquivalenceOrdering::After;
        } else if (name == "both") {
            scenario.ordering = EquivalenceOrdering::Both;
        } else {
            fail("ordering", "must be 'before', 'after', or 'both'");
        }
    }

    return scenario;
}

Scenario parse_scenario(const std::filesystem::path& path,
                        std::optional<std::uint64_t> override_seed,
                        std::optional<std::uint64_t> fallback_seed) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scenario file: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        // nlohmann reports position context (line/column) in e.what().
        throw ParseError(std::string("scenario file ") + path.string() + ": " +
                         e.what());
    }
    return parse_scenario_json(doc, override_seed, fallback_seed);
}

namespace {

ordered_json channel_json(const ChannelModel& ch) {
    return ordered_json{{"transmittance", ch.transmittance},
                        {"misalignment", ch.misalignment},
                        {"errorAngleDeg", ch.error_angle / kDegToRad}};
}

ordered_json detector_json(const DetectorModel& det) {
    ordered_json outcomes = ordered_json::array();
    for (std::size_t k = 0; k < kBellStateCount; ++k) {
        if (det.detectable[k]) {
            outcomes.push_back(to_string(static_cast<BellOutcome>(k)));
        }
    }
    return ordered_json{{"efficiency", det.efficiency},
                        {"darkCountRate", det.dark_count_rate},
                        {"detectableOutcomes", outcomes}};
}

ordered_json geometry_json(const Geometry& geom) {
    ordered_json verifiers = ordered_json::array();
    for (const auto& v : geom.verifiers) {
        verifiers.push_back(ordered_json::array({v.x, v.y}));
    }
    return ordered_json{{"verifiers", verifiers},
                        {"claimed", ordered_json::array({geom.claimed.x, geom.claimed.y})},
                        {"timingTolerance", geom.tau}};
}

ordered_json amplitude_json(const Complex& c) {
    return ordered_json::array({c.real(), c.imag()});
}

ordered_json prover_json(const ProverSpec& prover) {
    std::string kind = "honest";
    switch (prover.kind) {
        case ProverSpec::Kind::Honest: kind = "honest"; break;
        case ProverSpec::Kind::Displaced: kind = "displaced"; break;
        case ProverSpec::Kind::RandomOutcome: kind = "random"; break;
        case ProverSpec::Kind::SplitReports: kind = "splitReports"; break;
        case ProverSpec::Kind::Delayed: kind = "delayed"; break;
    }
    return ordered_json{
        {"kind", kind},
        {"actualPosition", ordered_json::array({prover.actual.x, prover.actual.y})},
        {"processingDelay", prover.processing_delay}};
}

template <typename T>
ordered_json optional_json(const std::optional<T>& value) {
    if (value) return ordered_json(*value);
    return ordered_json(nullptr);
}

ordered_json qpv_report_json(const QpvReport& report) {
    return ordered_json{{"rounds", report.rounds},
                        {"detections", report.detections},
                        {"errors", report.errors},
                        {"errorRate", report.error_rate},
                        {"timingOk", report.timing_ok},
                        {"consistencyOk", report.consistency_ok},
                        {"accepted", report.accepted},
                        {"threshold", report.threshold},
                        {"abortedStep", optional_json(report.aborted_step)}};
}

ordered_json attack_report_json(const AttackReport& report) {
    return ordered_json{
        {"analyticErrorRateZ", optional_json(report.analytic_er_z)},
        {"analyticErrorRateX", optional_json(report.analytic_er_x)},
        {"analyticErrorRate", optional_json(report.analytic_er)},
        {"empiricalErrorRate", report.empirical_er},
        {"halfWidth3Sigma", report.er_half_width},
        {"detectionRate", report.detection_rate},
        {"rounds", report.rounds},
        {"detections", report.detections},
        {"errors", report.errors},
        {"step5Abort", report.step5_abort},
        {"adversaryPositions", ordered_json::array({report.adversary_positions[0],
                                                    report.adversary_positions[1]})},
        {"responseLateness", ordered_json::array({report.response_lateness[0],
                                                  report.response_lateness[1]})}};
}

QpvSessionConfig qpv_config_from(const Scenario& scenario) {
    QpvSessionConfig cfg;
    cfg.rounds = scenario.rounds;
    cfg.channel0 = scenario.channel_a;
    cfg.channel1 = scenario.channel_b;
    cfg.detector = scenario.detector;
    cfg.threshold = scenario.threshold;
    cfg.seed = scenario.seed;
    return cfg;
}

// Ratios rate(eta) / rate(eta/2) for every eta whose half is also swept.
ordered_json halving_ratios(const std::vector<std::pair<double, double>>& table) {
    ordered_json out = ordered_json::array();
    for (const auto& [eta, rate] : table) {
        for (const auto& [eta_low, rate_low] : table) {
            if (std::abs(eta_low - 0.5 * eta) < 1e-12 && rate_low > 0.0) {
                out.push_back(ordered_json{{"etaHigh", eta},
                                           {"etaLow", eta_low},
                                           {"ratio", rate / rate_low}});
            }
        }
    }
    return out;
}

ordered_json run_kind(const Scenario& scenario, bool& aborted) {
    switch (scenario.kind) {
        case ScenarioKind::Mdi: {
            MdiSessionConfig cfg{scenario.rounds, scenario.channel_a,
                                 scenario.channel_b, scenario.detector,
                                 scenario.seed};
            const auto result = run_mdi_session(cfg);
            return ordered_json{{"rounds", result.rounds},
                                {"coincidences", result.coincidences},
                                {"gain", result.gain},
                                {"siftedLength", result.key_a.size()},
                                {"keptZ", result.kept_z},
                                {"keptX", result.kept_x},
                                {"errorsZ", result.errors_z},
                                {"errorsX", result.errors_x},
                                {"qberZ", optional_json(result.qber_z)},
                                {"qberX", optional_json(result.qber_x)}};
        }
        case ScenarioKind::Bb84Relay: {
            TrustedRelayConfig cfg{scenario.rounds, scenario.channel_a,
                                   scenario.channel_b, scenario.detector,
                                   scenario.seed};
            const auto report = run_trusted_relay_session(cfg);
            const bool match = report.recovered_key == report.alice_key;
            return ordered_json{
                {"mode", to_string(report.mode)},
                {"qberLinkA", optional_json(report.qber_link_a)},
                {"qberLinkB", optional_json(report.qber_link_b)},
                {"keyLength", report.key_length},
                {"truncated", report.truncated},
                {"keysMatch", match},
                {"forwardedCiphertext", bits_to_string(report.forwarded_ciphertext)},
                {"recoveredKey", bits_to_string(report.recovered_key)}};
        }
        case ScenarioKind::RateCompare: {
            MdiSessionConfig mdi_cfg{scenario.rounds, scenario.channel_a,
                                     scenario.channel_b, scenario.detector,
                                     scenario.seed};
            const auto mdi_table = gain_scaling(mdi_cfg, scenario.eta_values);
            Bb84LinkConfig bb84_cfg{scenario.rounds, scenario.channel_a,
                                    scenario.detector, scenario.seed};
            const auto bb84_table =
                rate_scaling_bb84(bb84_cfg, scenario.eta_values);

            ordered_json mdi_rows = ordered_json::array();
            for (const auto& [eta, gain] : mdi_table) {
                mdi_rows.push_back(ordered_json{{"eta", eta}, {"rate", gain}});
            }
            ordered_json bb84_rows = ordered_json::array();
            for (const auto& [eta, kept] : bb84_table) {
                bb84_rows.push_back(ordered_json{{"eta", eta}, {"rate", kept}});
            }
            return ordered_json{{"mdi", mdi_rows},
                                {"bb84", bb84_rows},
                                {"mdiHalvingRatios", halving_ratios(mdi_table)},
                                {"bb84HalvingRatios", halving_ratios(bb84_table)}};
        }
        case ScenarioKind::QpvHonest: {
            const auto output = run_qpv_session(scenario.geometry, scenario.prover,
                                                qpv_config_from(scenario));
            aborted = output.report.aborted_step.has_value();
            return qpv_report_json(output.report);
        }
        case ScenarioKind::QpvLocc: {
            AttackSimConfig cfg;
            cfg.rounds = scenario.rounds;
            cfg.channel0 = scenario.channel_a;
            cfg.channel1 = scenario.channel_b;
            cfg.threshold = scenario.threshold;
            cfg.seed = scenario.seed;
            cfg.adversary0_x = scenario.adversary0_x;
            cfg.adversary1_x = scenario.adversary1_x;
            const LoccStrategy strategy =
                scenario.locc_random_guess
                    ? LoccStrategy::random_guess()
                    : LoccStrategy::post_selected(*scenario.attack_state,
                                                  scenario.locc_reported);
            const auto report =
                simulate_locc_attack(strategy, scenario.geometry, cfg);
            return attack_report_json(report);
        }
        case ScenarioKind::QpvEpr: {
            AttackSimConfig cfg;
            cfg.rounds = scenario.rounds;
            cfg.channel0 = scenario.channel_a;
            cfg.channel1 = scenario.channel_b;
            cfg.threshold = scenario.threshold;
            cfg.seed = scenario.seed;
            cfg.adversary0_x = scenario.adversary0_x;
            cfg.adversary1_x = scenario.adversary1_x;
            cfg.designated = scenario.epr_designated;
            const auto report = simulate_epr_attack(scenario.geometry, cfg);
            return attack_report_json(report);
        }
        case ScenarioKind::QpvBound: {
            const auto result = minimize_avg_error(scenario.budget, scenario.seed);
            ordered_json out{
                {"budget", scenario.budget},
                {"minimum", result.minimum},
                {"converged", result.converged},
                {"evaluations", result.evaluations},
                {"minimizer",
                 ordered_json{{"alpha0", amplitude_json(result.state.alpha0)},
                              {"beta0", amplitude_json(result.state.beta0)},
                              {"alpha1", amplitude_json(result.state.alpha1)},
                              {"beta1", amplitude_json(result.state.beta1)}}}};
            if (scenario.grid_resolution) {
                const auto grid = grid_min_avg_error(*scenario.grid_resolution);
                out["grid"] = ordered_json{{"resolution", *scenario.grid_resolution},
                                           {"minimum", grid.minimum},
                                           {"evaluations", grid.evaluations}};
            }
            return out;
        }
        case ScenarioKind::QpvEquivalence: {
            auto cfg = qpv_config_from(scenario);
            cfg.collect_records = true;

            const bool run_before =
                scenario.ordering != EquivalenceOrdering::After;
            const bool run_after =
                scenario.ordering != EquivalenceOrdering::Before;

            auto joint_counts = [](const std::vector<QpvRoundRecord>& records) {
                // Bins over (x0, x1, theta, announced), announced in
                // {4 Bell states, NoDetection}.
                std::vector<std::uint64_t> counts(2 * 2 * 2 * 5, 0);
                for (const auto& r : records) {
                    const auto outcome = static_cast<std::size_t>(r.reported_to_v0);
                    const std::size_t bin =
                        ((static_cast<std::size_t>(r.x0) * 2 +
                          static_cast<std::size_t>(r.x1)) *
                             2 +
                         static_cast<std::size_t>(r.theta)) *
                            5 +
                        outcome;
                    ++counts[bin];
                }
                return counts;
            };

            auto pm_cfg = cfg;
            pm_cfg.seed = scenario.seed;
            const auto pm =
                run_qpv_session(scenario.geometry, ProverSpec{}, pm_cfg);
            const auto pm_counts = joint_counts(pm.records);

            ordered_json out{{"prepareAndMeasure", qpv_report_json(pm.report)}};
            ordered_json tests = ordered_json::array();

            std::vector<std::uint64_t> before_counts, after_counts;
            if (run_before) {
                auto eb_cfg = cfg;
                eb_cfg.seed = scenario.seed + 1;
                const auto eb = run_entanglement_session(
                    scenario.geometry, eb_cfg, MeasurementOrder::BeforeSend);
                before_counts = joint_counts(eb.records);
                out["entanglementBefore"] = qpv_report_json(eb.report);
                const auto test =
                    stats::chi_square_two_sample(pm_counts, before_counts);
                tests.push_back(ordered_json{{"pair", "pm-vs-before"},
                                             {"statistic", test.statistic},
                                             {"dof", test.dof},
                                             {"pValue", test.p_value}});
            }
            if (run_after) {
                auto eb_cfg = cfg;
                eb_cfg.seed = scenario.seed + 2;
                const auto eb = run_entanglement_session(
                    scenario.geometry, eb_cfg,
                    MeasurementOrder::AfterBellMeasurement);
                after_counts = joint_counts(eb.records);
                out["entanglementAfter"] = qpv_report_json(eb.report);
                const auto test =
                    stats::chi_square_two_sample(pm_counts, after_counts);
                tests.push_back(ordered_json{{"pair", "pm-vs-after"},
                                             {"statistic", test.statistic},
                                             {"dof", test.dof},
                                             {"pValue", test.p_value}});
            }
            if (run_before && run_after) {
                const auto test =
                    stats::chi_square_two_sample(before_counts, after_counts);
                tests.push_back(ordered_json{{"pair", "before-vs-after"},
                                             {"statistic", test.statistic},
                                             {"dof", test.dof},
                                             {"pValue", test.p_value}});
            }
            out["chiSquare"] = tests;
            return out;
        }
    }
    return ordered_json{};
}

}  // namespace

ordered_json scenario_to_json(const Scenario& scenario) {
    ordered_json out{{"kind", to_string(scenario.kind)},
                     {"seed", scenario.seed},
                     {"rounds", scenario.rounds}};
    switch (scenario.kind) {
        case ScenarioKind::Mdi:
        case ScenarioKind::Bb84Relay:
            out["channelA"] = channel_json(scenario.channel_a);
            out["channelB"] = channel_json(scenario.channel_b);
            out["detector"] = detector_json(scenario.detector);
            break;
        case ScenarioKind::RateCompare:
            out["channelA"] = channel_json(scenario.channel_a);
            out["channelB"] = channel_json(scenario.channel_b);
            out["detector"] = detector_json(scenario.detector);
            out["etaValues"] = scenario.eta_values;
            break;
        case ScenarioKind::QpvHonest:
            out["channel0"] = channel_json(scenario.channel_a);
            out["channel1"] = channel_json(scenario.channel_b);
            out["detector"] = detector_json(scenario.detector);
            out["geometry"] = geometry_json(scenario.geometry);
            out["threshold"] = scenario.threshold;
            out["prover"] = prover_json(scenario.prover);
            break;
        case ScenarioKind::QpvLocc: {
            out["channel0"] = channel_json(scenario.channel_a);
            out["channel1"] = channel_json(scenario.channel_b);
            out["geometry"] = geometry_json(scenario.geometry);
            out["threshold"] = scenario.threshold;
            ordered_json attack;
            if (scenario.locc_random_guess) {
                attack["strategy"] = "randomGuess";
            } else {
                attack["strategy"] = "postSelected";
                attack["alpha0"] = amplitude_json(scenario.attack_state->alpha0);
                attack["beta0"] = amplitude_json(scenario.attack_state->beta0);
                attack["alpha1"] = amplitude_json(scenario.attack_state->alpha1);
                attack["beta1"] = amplitude_json(scenario.attack_state->beta1);
            }
            attack["reported"] = to_string(scenario.locc_reported);
            out["attack"] = attack;
            if (scenario.adversary0_x && scenario.adversary1_x) {
                out["adversaryPositions"] = ordered_json::array(
                    {*scenario.adversary0_x, *scenario.adversary1_x});
            }
            break;
        }
        case ScenarioKind::QpvEpr:
            out["channel0"] = channel_json(scenario.channel_a);
            out["channel1"] = channel_json(scenario.channel_b);
            out["geometry"] = geometry_json(scenario.geometry);
            out["threshold"] = scenario.threshold;
            out["designated"] = to_string(scenario.epr_designated);
            if (scenario.adversary0_x && scenario.adversary1_x) {
                out["adversaryPositions"] = ordered_json::array(
                    {*scenario.adversary0_x, *scenario.adversary1_x});
            }
            break;
        case ScenarioKind::QpvBound:
            out["budget"] = scenario.budget;
            out["gridResolution"] = optional_json(scenario.grid_resolution);
            break;
        case ScenarioKind::QpvEquivalence:
            out["channel0"] = channel_json(scenario.channel_a);
            out["channel1"] = channel_json(scenario.channel_b);
            out["detector"] = detector_json(scenario.detector);
            out["geometry"] = geometry_json(scenario.geometry);
            out["threshold"] = scenario.threshold;
            out["ordering"] = scenario.ordering == EquivalenceOrdering::Before
                                  ? "before"
                                  : scenario.ordering == EquivalenceOrdering::After
                                        ? "after"
                                        : "both";
            break;
    }
    return out;
}

RunResult run_scenario(const Scenario& scenario) {
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.report = ordered_json{{"schemaVersion", 1},
                                 {"kind", to_string(scenario.kind)},
                                 {"scenario", scenario_to_json(scenario)}};
    bool aborted = false;
    result.report["result"] = run_kind(scenario, aborted);
    result.aborted = aborted;
    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start);
    result.report["wallClockSeconds"] = elapsed.count();
    return result;
}

namespace {

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string scalar_to_csv(const ordered_json& value) {
    if (value.is_null()) return "";
    if (value.is_string()) return csv_escape(value.get<std::string>());
    return value.dump();
}

}  // namespace

std::string report_to_csv(const ordered_json& report) {
    std::ostringstream out;
    const std::string kind = report.value("kind", "");
    if (kind == "rate-compare") {
        out << "protocol,eta,rate\n";
        const auto& result = report.at("result");
        for (const char* proto : {"mdi", "bb84"}) {
            if (!result.contains(proto)) continue;
            for (const auto& row : result.at(proto)) {
                out << proto << ',' << row.at("eta").dump() << ','
                    << row.at("rate").dump() << '\n';
            }
        }
        return out.str();
    }

    // Single summary row: every scalar field of result, in order.
    std::vector<std::string> headers, values;
    for (const auto& item : report.at("result").items()) {
        if (item.value().is_object() || item.value().is_array()) continue;
        headers.push_back(item.key());
        values.push_back(scalar_to_csv(item.value()));
    }
    for (std::size_t i = 0; i < headers.size(); ++i) {
        out << headers[i] << (i + 1 < headers.size() ? ',' : '\n');
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << values[i] << (i + 1 < values.size() ? ',' : '\n');
    }
    return out.str();
}

void emit_report(const ordered_json& report, ReportFormat format,
                 const std::string& path) {
    const std::string body = format == ReportFormat::Json
                                 ? report.dump(2) + "\n"
                                 : report_to_csv(report);
    if (path.empty() || path == "-") {
        std::cout << body;
        if (!std::cout) throw IoError("failed to write report to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << body;
    if (!out) throw IoError("failed while writing report to: " + path);
}

}  // namespace qkdsim
