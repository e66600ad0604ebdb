#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qkdsim/errors.hpp"
#include "qkdsim/scenario.hpp"

namespace {

// Exit codes, stable across releases:
//   0 success, 2 validation or parse error, 3 protocol abort, 4 I/O error.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitProtocolAbort = 3;
constexpr int kExitIo = 4;

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("QKDSIM_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    try {
        return std::stoull(raw);
    } catch (const std::exception&) {
        throw qkdsim::ValidationError("QKDSIM_SEED", "must be an unsigned integer");
    }
}

qkdsim::ReportFormat parse_format(const std::string& name) {
    if (name == "json") return qkdsim::ReportFormat::Json;
    if (name == "csv") return qkdsim::ReportFormat::Csv;
    throw qkdsim::ValidationError("--format", "must be 'json' or 'csv'");
}

int emit_and_finish(const qkdsim::RunResult& run, const std::string& format,
                    const std::string& out_path) {
    qkdsim::emit_report(run.report, parse_format(format), out_path);
    if (run.aborted) {
        const auto& result = run.report.at("result");
        std::cerr << "protocol abort at step "
                  << result.value("abortedStep", 0) << "\n";
        return kExitProtocolAbort;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for a reconfigurable free-space QKD network: "
                 "MDI-QKD via an untrusted relay, BB84 via a trusted relay, "
                 "and Bell-measurement position verification."};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::string format = "json";
    std::optional<std::uint64_t> seed_flag;

    auto* simulate = app.add_subcommand("simulate", "Run a scenario file");
    simulate->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();
    simulate->add_option("--seed", seed_flag, "Override the scenario seed");
    simulate->add_option("--out", out_path, "Report destination (default stdout)");
    simulate->add_option("--format", format, "Report format: json or csv");

    std::uint64_t budget = 10000;
    std::optional<double> grid_resolution;
    auto* bound = app.add_subcommand(
        "bound", "Minimize the intercept attack's average error rate");
    bound->add_option("--budget", budget, "Objective evaluation budget");
    bound->add_option("--grid-resolution", grid_resolution,
                      "Also run the brute-force grid oracle at this spacing "
                      "(radians)");
    bound->add_option("--seed", seed_flag, "Optimizer restart seed");
    bound->add_option("--out", out_path, "Report destination (default stdout)");
    bound->add_option("--format", format, "Report format: json or csv");

    std::string sweep_param = "eta";
    std::vector<double> sweep_values;
    std::string sweep_protocol = "both";
    std::uint64_t sweep_rounds = 1000000;
    auto* sweep = app.add_subcommand(
        "sweep", "Sweep detector efficiency and report rates per protocol");
    sweep->add_option("--param", sweep_param, "Swept parameter (only 'eta')");
    sweep->add_option("--values", sweep_values, "Comma-separated sweep values")
        ->delimiter(',');
    sweep->add_option("--protocol", sweep_protocol, "mdi, bb84, or both");
    sweep->add_option("--rounds", sweep_rounds, "Rounds per sweep point");
    sweep->add_option("--seed", seed_flag, "Session seed");
    sweep->add_option("--out", out_path, "Report destination (default stdout)");
    sweep->add_option("--format", format, "Report format: json or csv (default csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (simulate->parsed()) {
            const auto scenario =
                qkdsim::parse_scenario(scenario_path, seed_flag, env_seed());
            return emit_and_finish(qkdsim::run_scenario(scenario), format,
                                   out_path);
        }

        if (bound->parsed()) {
            qkdsim::Scenario scenario;
            scenario.kind = qkdsim::ScenarioKind::QpvBound;
            scenario.seed = seed_flag.value_or(env_seed().value_or(1));
            scenario.budget = budget;
            if (budget == 0) {
                throw qkdsim::ValidationError("--budget", "must be positive");
            }
            scenario.grid_resolution = grid_resolution;
            if (grid_resolution && *grid_resolution <= 0.0) {
                throw qkdsim::ValidationError("--grid-resolution",
                                              "must be positive");
            }
            return emit_and_finish(qkdsim::run_scenario(scenario), format,
                                   out_path);
        }

        // sweep
        if (sweep_param != "eta") {
            throw qkdsim::ValidationError("--param",
                                          "only 'eta' can be swept");
        }
        if (sweep_protocol != "mdi" && sweep_protocol != "bb84" &&
            sweep_protocol != "both") {
            throw qkdsim::ValidationError("--protocol",
                                          "must be 'mdi', 'bb84', or 'both'");
        }
        for (double v : sweep_values) {
            if (v <= 0.0 || v > 1.0) {
                throw qkdsim::ValidationError("--values",
                                              "entries must lie in (0, 1]");
            }
        }
        if (sweep_rounds == 0) {
            throw qkdsim::ValidationError("--rounds", "must be positive");
        }
        qkdsim::Scenario scenario;
        scenario.kind = qkdsim::ScenarioKind::RateCompare;
        scenario.seed = seed_flag.value_or(env_seed().value_or(1));
        scenario.rounds = sweep_rounds;
        scenario.eta_values = sweep_values;
        auto run = qkdsim::run_scenario(scenario);
        if (sweep_protocol != "both") {
            // Trim the unrequested protocol from the result tables.
            const std::string drop = sweep_protocol == "mdi" ? "bb84" : "mdi";
            run.report["result"].erase(drop);
            run.report["result"].erase(drop + "HalvingRatios");
        }
        if (!sweep->count("--format")) format = "csv";
        return emit_and_finish(run, format, out_path);
    } catch (const qkdsim::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qkdsim::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qkdsim::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }
}
