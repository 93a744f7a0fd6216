#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "qr/errors.hpp"
#include "qr/scenario.hpp"

namespace qr {
namespace {

struct BuiltinDef {
    const char* name;
    const char* description;
    const char* json;
};

// Definitions are stored as the same JSON the CLI accepts from files, so
// `show` prints exactly what `run` would consume.

constexpr const char* kExpJson = R"json({
  "name": "example-3.1-exp",
  "mode": "riccati",
  "coeffs": {"a": {"components": [{"poly": [1], "exp": -1}, 0, 0, 0]}},
  "seeds": [0, 1, -1, -2],
  "horizon": 18,
  "rtol": 1e-10,
  "atol": 1e-13,
  "checks": [
    {"id": "closed-form-3.2",
     "escape": {"seed": 3, "time": 0.6931471805599453, "tol": 0.01}},
    "identity-2.7",
    "identity-2.8",
    "identity-2.9",
    "identity-2.10",
    "identity-2.2",
    {"id": "nu-extremal", "base_horizon": 60, "rtol": 1e-12, "atol": 1e-14,
     "expect_mu_windows": ["converged"],
     "expect_nu_t1": [1, 0, 0, 0],
     "expect_limit_t1": [-1, 0, 0, 0],
     "tol": 1e-6,
     "track": {"form": {"components": [{"poly": [-1], "exp": 1}, 0, 0, 0]},
               "t_hi": 10, "rel_tol": 1e-5}},
    {"id": "thm-3.1-witness", "base_horizon": 18, "rtol": 1e-12, "atol": 1e-14,
     "span_hi": 10, "tol": 1e-6},
    {"id": "thm-3.3-tail", "base_horizon": 60, "rtol": 1e-12, "atol": 1e-14,
     "checkpoints": [20, 40]},
    {"id": "classification",
     "expect_verdict": "extremal",
     "expect_seeds": ["normal-evidence", "normal-evidence",
                      "extremal-candidate", "escaped"]}
  ]
})json";

constexpr const char* kConstJson = R"json({
  "name": "example-3.1-const",
  "mode": "riccati",
  "coeffs": {"a": {"const": 1}},
  "seeds": [0, 1, -1],
  "horizon": 3e6,
  "checks": [
    {"id": "closed-form-3.2",
     "escape": {"seed": 2, "time": 1.0, "tol": 0.01}},
    "identity-2.7",
    "identity-2.8",
    "identity-2.9",
    "identity-2.10",
    "identity-2.2",
    {"id": "nu-extremal", "base_horizon": 3e6,
     "expect_mu_windows": ["diverges-to-infinity"]},
    {"id": "classification",
     "expect_verdict": "extremal",
     "expect_seeds": ["extremal-candidate", "normal-evidence", "escaped"]}
  ]
})json";

constexpr const char* kBumpJson = R"json({
  "name": "example-3.1-bump",
  "mode": "riccati",
  "coeffs": {"a": {"components": [{"bump": {"amp": 0.5, "support": [0, 2]}}, 0, 0, 0]}},
  "seeds": [0, 1, -1],
  "horizon": 16,
  "checks": [
    "closed-form-3.2",
    "identity-2.7",
    "identity-2.8",
    "identity-2.9",
    "identity-2.10",
    "identity-2.2",
    {"id": "nu-extremal", "base_horizon": 16, "rtol": 1e-11, "atol": 1e-14,
     "expect_mu_windows": ["converged"]},
    {"id": "classification",
     "expect_verdict": "normal",
     "expect_seeds": ["normal-evidence", "normal-evidence", "normal-evidence"]}
  ]
})json";

constexpr const char* kLambdaJson = R"json({
  "name": "example-3.3-lambda",
  "mode": "riccati",
  "coeffs": {
    "a": {"const": 1},
    "b": {"components": [0, {"poly": [-1], "exp": -1}, 0, 0]},
    "c": {"components": [0, {"poly": [-1], "exp": -1}, 0, 0]},
    "d": {"components": [{"poly": [-1], "exp": -2}, {"poly": [1], "exp": -1}, 0, 0]}
  },
  "seeds": [[0, 1, 0, 0]],
  "horizon": 10,
  "exact_solution": {"components": [0, {"poly": [1], "exp": -1}, 0, 0]},
  "checks": [
    {"id": "exact-solution-residual", "tol": 1e-8,
     "companions_one": true, "companion_tol": 1e-8,
     "match_seed": true, "match_tol": 1e-7},
    "identity-2.7",
    "identity-2.8"
  ]
})json";

constexpr const char* kOscJson = R"json({
  "name": "example-3.4",
  "mode": "riccati",
  "coeffs": {"t0": 2.7983860457838872,
             "a": {"components": [{"poly": [0, 1], "cos": 1}, 0, 0, 0]}},
  "seeds": [0, [0, 1, 0, 0], [0, 0, 1, 0]],
  "horizon": 60,
  "checks": [
    "identity-2.7",
    "identity-2.8",
    "identity-2.9",
    "identity-2.10",
    "identity-2.2",
    {"id": "nu-extremal", "base_horizon": 200, "rtol": 1e-7, "atol": 1e-10,
     "expect_mu_windows": ["oscillatory", "unknown"]},
    {"id": "classification",
     "expect_verdict": "sub-extremal-non-extremal",
     "expect_seeds": ["indeterminate", "normal-evidence", "normal-evidence"]}
  ]
})json";

constexpr const char* kSplitPairJson = R"json({
  "name": "remark-4.3",
  "mode": "system",
  "system": {"a11": {"const": [0, 1, 0, 0]}, "a22": {"const": [0, 0, 0, 1]}},
  "pairs": [{"phi": [1, 0, 0, 0], "psi": [1, 0, 0, 0]}],
  "horizon": 10,
  "rtol": 1e-11,
  "atol": 1e-14,
  "checks": [
    "lift-project",
    "modulus-4.4",
    {"id": "covariance", "sigma": [0.3, -1.2, 0.7, 0.4],
     "tol": 1e-7, "counter_tol": 0.1}
  ]
})json";

constexpr const char* kRealExtremalJson = R"json({
  "name": "thm-4.2-real-extremal",
  "mode": "system",
  "system": {"a12": {"components": [{"poly": [1], "exp": -2}, 0, 0, 0]}},
  "pairs": [{"phi": [1, 0, 0, 0], "psi": [0, 0, 0, 0]},
            {"phi": [1, 0, 0, 0], "psi": [2, 0, 0, 0]}],
  "seeds": [0, 1, -2],
  "horizon": 40,
  "index_set": [0],
  "checks": [
    {"id": "thm42",
     "expect": "normal-or-extremal",
     "expect_symmetrized": "normal-or-extremal"},
    {"id": "statement2", "T": 0, "base_horizon": 50, "threshold": 1e3},
    {"id": "ratios", "step": 0.1, "drift_from": 30, "drift_tol": 1e-3},
    {"id": "classification-4.2", "horizon": 8.5, "rtol": 1e-11, "atol": 1e-14,
     "expect_verdict": "extremal",
     "expect_seeds": ["normal-evidence", "normal-evidence", "extremal-candidate"]}
  ]
})json";

const std::array<BuiltinDef, 7> kBuiltins = {{
    {"example-3.1-exp",
     "Pure quadratic equation with integrable exponential coefficient: "
     "closed-form family, closed-form limit solution, identity battery, "
     "classification.",
     kExpJson},
    {"example-3.1-const",
     "Pure quadratic equation with constant coefficient over a very long "
     "span: the unbounded running integral drives the growth route of the "
     "classifier.",
     kConstJson},
    {"example-3.1-bump",
     "Pure quadratic equation with compactly supported coefficient: the "
     "running integral freezes, every seed settles, the tail dies.",
     kBumpJson},
    {"example-3.3-lambda",
     "Fully populated equation built around a known exponentially decaying "
     "solution whose companion functions are identically one.",
     kLambdaJson},
    {"example-3.4",
     "Pure quadratic equation with an oscillating coefficient of growing "
     "amplitude: bounded seeds, no settled tail.",
     kOscJson},
    {"remark-4.3",
     "Decoupled constant pair system with unit-modulus factors: projection, "
     "lift, modulus identity, one-sided covariance.",
     kSplitPairJson},
    {"thm-4.2-real-extremal",
     "Real exponentially decaying coupling: structural sign test, principal "
     "pair via the limit construction, weighted tail integral, modulus "
     "ratios, classification through the quotient equation.",
     kRealExtremalJson},
}};

const BuiltinDef* find(const std::string& name) {
    for (const BuiltinDef& def : kBuiltins)
        if (name == def.name) return &def;
    return nullptr;
}

}  // namespace

std::vector<std::string> builtin_names() {
    std::vector<std::string> out;
    out.reserve(kBuiltins.size());
    for (const BuiltinDef& def : kBuiltins) out.emplace_back(def.name);
    return out;
}

bool is_builtin(const std::string& name) { return find(name) != nullptr; }

Scenario builtin_scenario(const std::string& name) {
    const BuiltinDef* def = find(name);
    if (!def) throw OutOfRange("unknown builtin scenario '" + name + "'");
    return parse_scenario(nlohmann::json::parse(def->json), "builtin:" + name);
}

std::string builtin_description(const std::string& name) {
    const BuiltinDef* def = find(name);
    if (!def) throw OutOfRange("unknown builtin scenario '" + name + "'");
    return def->description;
}

}  // namespace qr
