#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qr/coeffs.hpp"
#include "qr/linear_system.hpp"
#include "qr/quaternion.hpp"

namespace qr {

/// One requested check: a registry id plus check-specific parameters.
/// Expectations (expected verdicts, reference values) live in the params.
struct CheckRequest {
    std::string id;
    nlohmann::json params = nlohmann::json::object();
};

/// A self-contained experiment description: one equation or one linear pair
/// system, initial values, tolerances, and the list of checks to run.
struct Scenario {
    std::string name;
    bool system_mode = false;

    CoeffSet coeffs;      // equation mode
    SystemCoeffs system;  // pair mode
    std::vector<Quat> seeds;
    std::vector<std::pair<Quat, Quat>> pairs;  // (phi, psi) at t1

    double t1 = 0.0;
    double horizon = 50.0;
    double rtol = 1e-10;
    double atol = 1e-13;

    std::vector<int> index_set;  // component split for the structural checks
    bool try_all_index_sets = false;

    CoeffFn exact_solution;  // closed form for residual checks
    bool has_exact = false;

    std::vector<CheckRequest> checks;
};

/// Parse and validate. Throws SchemaError on malformed input, unknown check
/// ids, checks that do not apply to the mode, or duplicate check ids.
[[nodiscard]] Scenario parse_scenario(const nlohmann::json& j, const std::string& path);
[[nodiscard]] nlohmann::ordered_json serialize(const Scenario& sc);

struct CheckResult {
    std::string id;
    bool passed = false;
    std::string summary;     // one-line outcome
    double deviation = 0.0;  // worst measured deviation, where meaningful
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
};

struct RunReport {
    std::string scenario;
    bool all_passed = false;
    std::vector<CheckResult> checks;  // one entry per requested check, in order
    std::vector<std::string> csv_files;  // paths relative to the output root
};

[[nodiscard]] nlohmann::ordered_json serialize(const RunReport& report);

struct RunOptions {
    std::optional<double> horizon;  // command-line overrides
    std::optional<double> rtol;
    std::optional<double> atol;
    std::string out_dir = "qr-out";
    bool write_files = true;  // emit CSV series and report.json
};

/// Execute every requested check deterministically, emit per-seed (or
/// per-pair) CSV time series plus per-check series, and assemble the report.
/// Numerical failures inside a check mark that check failed; they do not
/// abort the run.
[[nodiscard]] RunReport run_scenario(const Scenario& sc, const RunOptions& opt);

// Built-in scenario catalog.
[[nodiscard]] std::vector<std::string> builtin_names();
[[nodiscard]] bool is_builtin(const std::string& name);
/// Throws OutOfRange for unknown names.
[[nodiscard]] Scenario builtin_scenario(const std::string& name);
[[nodiscard]] std::string builtin_description(const std::string& name);

}  // namespace qr
