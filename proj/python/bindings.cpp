#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "qkdsim/adversary.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/mdi.hpp"
#include "qkdsim/qpv.hpp"
#include "qkdsim/quantum.hpp"
#include "qkdsim/relay.hpp"
#include "qkdsim/scenario.hpp"

namespace py = pybind11;
using namespace qkdsim;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte Carlo engines for a reconfigurable free-space QKD "
              "network: MDI-QKD, trusted-relay BB84, and Bell-measurement "
              "position verification with its attack analyses.";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // quantum core -----------------------------------------------------
    py::enum_<BellOutcome>(m, "BellOutcome")
        .value("PhiPlus", BellOutcome::PhiPlus)
        .value("PhiMinus", BellOutcome::PhiMinus)
        .value("PsiPlus", BellOutcome::PsiPlus)
        .value("PsiMinus", BellOutcome::PsiMinus)
        .value("NoDetection", BellOutcome::NoDetection);

    py::class_<RandomStream>(m, "RandomStream")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("uniform", &RandomStream::uniform)
        .def("bit", &RandomStream::bit)
        .def("bernoulli", &RandomStream::bernoulli, py::arg("p"));

    py::class_<QubitState>(m, "QubitState")
        .def(py::init<>())
        .def(py::init([](Complex a0, Complex a1) {
                 return QubitState{a0, a1};
             }),
             py::arg("amp0"), py::arg("amp1"))
        .def_readwrite("amp0", &QubitState::amp0)
        .def_readwrite("amp1", &QubitState::amp1)
        .def("norm_sq", &QubitState::norm_sq)
        .def("is_normalized", &QubitState::is_normalized,
             py::arg("tol") = 1e-12);

    py::class_<TwoQubitState>(m, "TwoQubitState")
        .def(py::init<>())
        .def_readwrite("amps", &TwoQubitState::amps)
        .def("norm_sq", &TwoQubitState::norm_sq)
        .def("is_normalized", &TwoQubitState::is_normalized,
             py::arg("tol") = 1e-12);

    py::class_<ChannelModel>(m, "ChannelModel")
        .def(py::init<>())
        .def(py::init([](double t, double mis, double angle) {
                 return ChannelModel{t, mis, angle};
             }),
             py::arg("transmittance") = 1.0, py::arg("misalignment") = 0.0,
             py::arg("error_angle") = 1.5707963267948966)
        .def_readwrite("transmittance", &ChannelModel::transmittance)
        .def_readwrite("misalignment", &ChannelModel::misalignment)
        .def_readwrite("error_angle", &ChannelModel::error_angle);

    py::class_<DetectorModel>(m, "DetectorModel")
        .def(py::init<>())
        .def_static("partial_analyzer", &DetectorModel::partial_analyzer,
                    py::arg("eta") = 1.0)
        .def_static("full_analyzer", &DetectorModel::full_analyzer,
                    py::arg("eta") = 1.0)
        .def_readwrite("efficiency", &DetectorModel::efficiency)
        .def_readwrite("dark_count_rate", &DetectorModel::dark_count_rate)
        .def_readwrite("detectable", &DetectorModel::detectable)
        .def("detects", &DetectorModel::detects);

    m.def("prepare_bb84", &prepare_bb84, py::arg("bit"), py::arg("basis"));
    m.def("tensor", &tensor, py::arg("a"), py::arg("b"));
    m.def("bell_state", &bell_state, py::arg("outcome"));
    m.def("bell_outcome_probs", &bell_outcome_probs, py::arg("state"));
    m.def("bell_measure", &bell_measure, py::arg("state"), py::arg("detector"),
          py::arg("rng"));
    m.def("apply_channel", &apply_channel, py::arg("state"), py::arg("channel"),
          py::arg("rng"));
    m.def("rotate", &rotate, py::arg("state"), py::arg("angle"));
    m.def("measure_in_basis", &measure_in_basis, py::arg("state"),
          py::arg("basis"), py::arg("rng"));

    // MDI session ------------------------------------------------------
    py::class_<MdiSessionConfig>(m, "MdiSessionConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &MdiSessionConfig::rounds)
        .def_readwrite("channel_a", &MdiSessionConfig::channel_a)
        .def_readwrite("channel_b", &MdiSessionConfig::channel_b)
        .def_readwrite("detector", &MdiSessionConfig::detector)
        .def_readwrite("seed", &MdiSessionConfig::seed);

    py::class_<MdiRound>(m, "MdiRound")
        .def_readonly("bit_a", &MdiRound::bit_a)
        .def_readonly("basis_a", &MdiRound::basis_a)
        .def_readonly("bit_b", &MdiRound::bit_b)
        .def_readonly("basis_b", &MdiRound::basis_b)
        .def_readonly("announced", &MdiRound::announced);

    py::class_<MdiSessionResult>(m, "MdiSessionResult")
        .def_readonly("key_a", &MdiSessionResult::key_a)
        .def_readonly("key_b", &MdiSessionResult::key_b)
        .def_readonly("qber_z", &MdiSessionResult::qber_z)
        .def_readonly("qber_x", &MdiSessionResult::qber_x)
        .def_readonly("gain", &MdiSessionResult::gain)
        .def_readonly("rounds", &MdiSessionResult::rounds)
        .def_readonly("coincidences", &MdiSessionResult::coincidences);

    m.def("run_mdi_round", &run_mdi_round, py::arg("bit_a"), py::arg("basis_a"),
          py::arg("bit_b"), py::arg("basis_b"), py::arg("config"), py::arg("rng"));
    m.def("run_mdi_session", &run_mdi_session, py::arg("config"));
    m.def("gain_scaling", &gain_scaling, py::arg("config"), py::arg("eta_values"));

    // trusted relay ------------------------------------------------------
    py::enum_<RelayMode>(m, "RelayMode")
        .value("UntrustedMdi", RelayMode::UntrustedMdi)
        .value("TrustedBb84", RelayMode::TrustedBb84);

    py::class_<Relay>(m, "Relay")
        .def(py::init<RelayMode>(), py::arg("mode") = RelayMode::UntrustedMdi)
        .def_property_readonly("mode", &Relay::mode)
        .def("switch_mode", &Relay::switch_mode, py::arg("target"))
        .def("toggle_mode", &Relay::toggle_mode);

    py::class_<Bb84LinkConfig>(m, "Bb84LinkConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &Bb84LinkConfig::rounds)
        .def_readwrite("channel", &Bb84LinkConfig::channel)
        .def_readwrite("detector", &Bb84LinkConfig::detector)
        .def_readwrite("seed", &Bb84LinkConfig::seed);

    py::class_<KeyMaterial>(m, "KeyMaterial")
        .def_readonly("bits", &KeyMaterial::bits)
        .def_readonly("owner_a", &KeyMaterial::owner_a)
        .def_readonly("owner_b", &KeyMaterial::owner_b);

    py::class_<Bb84LinkResult>(m, "Bb84LinkResult")
        .def_readonly("user_key", &Bb84LinkResult::user_key)
        .def_readonly("relay_key", &Bb84LinkResult::relay_key)
        .def_readonly("qber", &Bb84LinkResult::qber)
        .def_readonly("kept_fraction", &Bb84LinkResult::kept_fraction)
        .def_readonly("rounds", &Bb84LinkResult::rounds)
        .def_readonly("kept", &Bb84LinkResult::kept);

    m.def("run_bb84_link", &run_bb84_link, py::arg("user"), py::arg("relay"),
          py::arg("config"));
    m.def(
        "otp_forward",
        [](const Bits& a, const Bits& b) {
            const auto r = otp_forward(a, b);
            return py::make_tuple(r.ciphertext, r.truncated);
        },
        py::arg("key_with_alice"), py::arg("key_with_bob"));
    m.def("otp_recover", &otp_recover, py::arg("ciphertext"),
          py::arg("key_with_bob"));
    m.def("rate_scaling_bb84", &rate_scaling_bb84, py::arg("config"),
          py::arg("eta_values"));

    py::class_<TrustedRelayConfig>(m, "TrustedRelayConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &TrustedRelayConfig::rounds)
        .def_readwrite("channel_a", &TrustedRelayConfig::channel_a)
        .def_readwrite("channel_b", &TrustedRelayConfig::channel_b)
        .def_readwrite("detector", &TrustedRelayConfig::detector)
        .def_readwrite("seed", &TrustedRelayConfig::seed);

    py::class_<RelayReport>(m, "RelayReport")
        .def_readonly("mode", &RelayReport::mode)
        .def_readonly("qber_link_a", &RelayReport::qber_link_a)
        .def_readonly("qber_link_b", &RelayReport::qber_link_b)
        .def_readonly("forwarded_ciphertext", &RelayReport::forwarded_ciphertext)
        .def_readonly("recovered_key", &RelayReport::recovered_key)
        .def_readonly("alice_key", &RelayReport::alice_key)
        .def_readonly("truncated", &RelayReport::truncated)
        .def_readonly("key_length", &RelayReport::key_length);

    m.def("run_trusted_relay_session", &run_trusted_relay_session,
          py::arg("config"));

    // position verification ---------------------------------------------
    py::class_<Vec2>(m, "Vec2")
        .def(py::init<>())
        .def(py::init([](double x, double y) {
                 return Vec2{x, y};
             }),
             py::arg("x"), py::arg("y") = 0.0)
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y);

    py::class_<Geometry>(m, "Geometry")
        .def(py::init<>())
        .def_static("line", &Geometry::line, py::arg("length"),
                    py::arg("claimed_x"), py::arg("tau") = 1e-9)
        .def_readwrite("verifiers", &Geometry::verifiers)
        .def_readwrite("claimed", &Geometry::claimed)
        .def_readwrite("tau", &Geometry::tau)
        .def("dist_to_claimed", &Geometry::dist_to_claimed)
        .def("validate", &Geometry::validate);

    py::class_<RoundSchedule>(m, "RoundSchedule")
        .def_readonly("send_times", &RoundSchedule::send_times)
        .def_readonly("arrival_deadline", &RoundSchedule::arrival_deadline);

    m.def("schedule_round", &schedule_round, py::arg("geometry"),
          py::arg("arrival_time") = std::nullopt);
    m.def("consistency_check", &consistency_check, py::arg("outcome"),
          py::arg("x0"), py::arg("x1"), py::arg("theta"));
    m.def("verify_timing", &verify_timing, py::arg("record"), py::arg("geometry"));

    py::class_<QpvRoundRecord>(m, "QpvRoundRecord")
        .def(py::init<>())
        .def_readwrite("x0", &QpvRoundRecord::x0)
        .def_readwrite("x1", &QpvRoundRecord::x1)
        .def_readwrite("theta", &QpvRoundRecord::theta)
        .def_readwrite("send_times", &QpvRoundRecord::send_times)
        .def_readwrite("arrival_deadline", &QpvRoundRecord::arrival_deadline)
        .def_readwrite("response_times", &QpvRoundRecord::response_times)
        .def_readwrite("reported_to_v0", &QpvRoundRecord::reported_to_v0)
        .def_readwrite("reported_to_v1", &QpvRoundRecord::reported_to_v1);

    auto prover = py::class_<ProverSpec>(m, "ProverSpec")
                      .def(py::init<>())
                      .def_readwrite("kind", &ProverSpec::kind)
                      .def_readwrite("actual", &ProverSpec::actual)
                      .def_readwrite("processing_delay", &ProverSpec::processing_delay);
    py::enum_<ProverSpec::Kind>(prover, "Kind")
        .value("Honest", ProverSpec::Kind::Honest)
        .value("Displaced", ProverSpec::Kind::Displaced)
        .value("RandomOutcome", ProverSpec::Kind::RandomOutcome)
        .value("SplitReports", ProverSpec::Kind::SplitReports)
        .value("Delayed", ProverSpec::Kind::Delayed);

    py::class_<QpvSessionConfig>(m, "QpvSessionConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &QpvSessionConfig::rounds)
        .def_readwrite("channel0", &QpvSessionConfig::channel0)
        .def_readwrite("channel1", &QpvSessionConfig::channel1)
        .def_readwrite("detector", &QpvSessionConfig::detector)
        .def_readwrite("threshold", &QpvSessionConfig::threshold)
        .def_readwrite("seed", &QpvSessionConfig::seed)
        .def_readwrite("collect_records", &QpvSessionConfig::collect_records);

    py::class_<QpvReport>(m, "QpvReport")
        .def_readonly("rounds", &QpvReport::rounds)
        .def_readonly("detections", &QpvReport::detections)
        .def_readonly("errors", &QpvReport::errors)
        .def_readonly("error_rate", &QpvReport::error_rate)
        .def_readonly("timing_ok", &QpvReport::timing_ok)
        .def_readonly("consistency_ok", &QpvReport::consistency_ok)
        .def_readonly("accepted", &QpvReport::accepted)
        .def_readonly("threshold", &QpvReport::threshold)
        .def_readonly("aborted_step", &QpvReport::aborted_step);

    py::class_<QpvSessionOutput>(m, "QpvSessionOutput")
        .def_readonly("report", &QpvSessionOutput::report)
        .def_readonly("records", &QpvSessionOutput::records);

    py::enum_<MeasurementOrder>(m, "MeasurementOrder")
        .value("BeforeSend", MeasurementOrder::BeforeSend)
        .value("AfterBellMeasurement", MeasurementOrder::AfterBellMeasurement);

    m.def("run_qpv_session", &run_qpv_session, py::arg("geometry"),
          py::arg("prover"), py::arg("config"));
    m.def("run_entanglement_session", &run_entanglement_session,
          py::arg("geometry"), py::arg("config"), py::arg("order"));

    // adversaries ---------------------------------------------------------
    py::class_<AttackState>(m, "AttackState")
        .def(py::init<>())
        .def(py::init([](Complex a0, Complex b0, Complex a1, Complex b1) {
                 return AttackState{a0, b0, a1, b1};
             }),
             py::arg("alpha0"), py::arg("beta0"), py::arg("alpha1"),
             py::arg("beta1"))
        .def_static("from_angles", &AttackState::from_angles, py::arg("t0"),
                    py::arg("phi0"), py::arg("t1"), py::arg("phi1"))
        .def_static("orthogonal_pair", &AttackState::orthogonal_pair)
        .def_readwrite("alpha0", &AttackState::alpha0)
        .def_readwrite("beta0", &AttackState::beta0)
        .def_readwrite("alpha1", &AttackState::alpha1)
        .def_readwrite("beta1", &AttackState::beta1)
        .def("is_normalized", &AttackState::is_normalized, py::arg("tol") = 1e-12);

    m.def("error_rate_z", &error_rate_z, py::arg("state"));
    m.def("error_rate_x", &error_rate_x, py::arg("state"));
    m.def("avg_error_rate", &avg_error_rate, py::arg("state"));

    py::class_<MinimizeResult>(m, "MinimizeResult")
        .def_readonly("state", &MinimizeResult::state)
        .def_readonly("minimum", &MinimizeResult::minimum)
        .def_readonly("converged", &MinimizeResult::converged)
        .def_readonly("evaluations", &MinimizeResult::evaluations);

    py::class_<GridSearchResult>(m, "GridSearchResult")
        .def_readonly("state", &GridSearchResult::state)
        .def_readonly("minimum", &GridSearchResult::minimum)
        .def_readonly("evaluations", &GridSearchResult::evaluations);

    m.def("minimize_avg_error", &minimize_avg_error, py::arg("search_budget"),
          py::arg("seed") = 1);
    m.def("grid_min_avg_error", &grid_min_avg_error, py::arg("resolution"));

    py::class_<LoccStrategy>(m, "LoccStrategy")
        .def_static("post_selected", &LoccStrategy::post_selected,
                    py::arg("target"),
                    py::arg("designated") = BellOutcome::PsiMinus)
        .def_static("random_guess", &LoccStrategy::random_guess)
        .def_readwrite("target", &LoccStrategy::target)
        .def_readwrite("designated", &LoccStrategy::designated)
        .def_readwrite("guess_uniformly", &LoccStrategy::guess_uniformly);

    py::class_<AttackSimConfig>(m, "AttackSimConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &AttackSimConfig::rounds)
        .def_readwrite("channel0", &AttackSimConfig::channel0)
        .def_readwrite("channel1", &AttackSimConfig::channel1)
        .def_readwrite("threshold", &AttackSimConfig::threshold)
        .def_readwrite("seed", &AttackSimConfig::seed)
        .def_readwrite("adversary0_x", &AttackSimConfig::adversary0_x)
        .def_readwrite("adversary1_x", &AttackSimConfig::adversary1_x)
        .def_readwrite("designated", &AttackSimConfig::designated);

    py::class_<AttackReport>(m, "AttackReport")
        .def_readonly("analytic_er_z", &AttackReport::analytic_er_z)
        .def_readonly("analytic_er_x", &AttackReport::analytic_er_x)
        .def_readonly("analytic_er", &AttackReport::analytic_er)
        .def_readonly("empirical_er", &AttackReport::empirical_er)
        .def_readonly("er_half_width", &AttackReport::er_half_width)
        .def_readonly("detection_rate", &AttackReport::detection_rate)
        .def_readonly("rounds", &AttackReport::rounds)
        .def_readonly("detections", &AttackReport::detections)
        .def_readonly("errors", &AttackReport::errors)
        .def_readonly("step5_abort", &AttackReport::step5_abort)
        .def_readonly("adversary_positions", &AttackReport::adversary_positions)
        .def_readonly("response_lateness", &AttackReport::response_lateness);

    py::class_<AdversaryTiming>(m, "AdversaryTiming")
        .def_readonly("positions", &AdversaryTiming::positions)
        .def_readonly("lateness", &AdversaryTiming::lateness)
        .def_readonly("feasible", &AdversaryTiming::feasible);

    m.def("adversary_timing", &adversary_timing, py::arg("geometry"),
          py::arg("e0_x"), py::arg("e1_x"));
    m.def("simulate_locc_attack", &simulate_locc_attack, py::arg("strategy"),
          py::arg("geometry"), py::arg("config"));
    m.def("simulate_epr_attack", &simulate_epr_attack, py::arg("geometry"),
          py::arg("config"));

    // scenarios ----------------------------------------------------------
    m.def(
        "run_scenario_file",
        [](const std::filesystem::path& path,
           std::optional<std::uint64_t> seed) {
            const auto scenario = parse_scenario(path, seed);
            const auto run = run_scenario(scenario);
            return py::make_tuple(run.report.dump(2), run.aborted);
        },
        py::arg("path"), py::arg("seed") = std::nullopt,
        "Parse and run a scenario file; returns (report_json, aborted).");
    m.def(
        "run_scenario_json",
        [](const std::string& text, std::optional<std::uint64_t> seed) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(text);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(e.what());
            }
            const auto scenario = parse_scenario_json(doc, seed);
            const auto run = run_scenario(scenario);
            return py::make_tuple(run.report.dump(2), run.aborted);
        },
        py::arg("text"), py::arg("seed") = std::nullopt,
        "Parse and run a scenario given as a JSON string; returns "
        "(report_json, aborted).");

#ifdef QKDSIM_VERSION
    m.attr("__version__") = QKDSIM_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
