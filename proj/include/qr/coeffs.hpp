#pragma once

#include <array>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qr/quaternion.hpp"

namespace qr {

// ---------------------------------------------------------------------------
// Scalar building blocks. Each component of a quaternion-valued coefficient
// is one of these real functions of time.
// ---------------------------------------------------------------------------

struct ScalarZero {};

struct ScalarConst {
    double c = 0.0;
};

/// c[0] + c[1] t + c[2] t^2 + ...
struct ScalarPoly {
    std::vector<double> coeffs;
};

/// p(t) * exp(alpha t)
struct ScalarPolyExp {
    std::vector<double> coeffs;
    double alpha = 0.0;
};

/// p(t) * cos(omega t + phase), or sin with `use_sin`.
struct ScalarPolyTrig {
    std::vector<double> coeffs;
    double omega = 1.0;
    double phase = 0.0;
    bool use_sin = false;
};

/// Smooth compactly supported bump on [lo, hi], peak value `amp` at the
/// midpoint, identically zero outside.
struct ScalarBump {
    double amp = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

using ScalarFn = std::variant<ScalarZero, ScalarConst, ScalarPoly, ScalarPolyExp,
                              ScalarPolyTrig, ScalarBump>;

[[nodiscard]] double eval(const ScalarFn& f, double t);
[[nodiscard]] ScalarFn negate(const ScalarFn& f);
[[nodiscard]] bool is_identically_zero(const ScalarFn& f);

/// Behaviour of |f| beyond a truncation point T.
enum class TailKind {
    Vanishes,       // identically zero beyond T
    Bounded,        // tail integral bounded by `bound`
    NonConvergent,  // |f| does not have an integrable tail
};

struct TailEstimate {
    TailKind kind = TailKind::Vanishes;
    double bound = 0.0;
};

[[nodiscard]] TailEstimate tail_beyond(const ScalarFn& f, double T);

// ---------------------------------------------------------------------------
// Quaternion-valued coefficients.
// ---------------------------------------------------------------------------

/// Sampled coefficient on a strictly increasing grid with linear or natural
/// cubic interpolation. Evaluation outside the grid is an error.
struct CoeffTable {
    std::vector<double> grid;
    std::vector<Quat> samples;
    bool cubic = true;
    // Second derivatives per component for the cubic case; filled on build.
    std::array<std::vector<double>, 4> second_derivs;
};

struct CoeffComponents {
    std::array<ScalarFn, 4> parts;
};

/// A quaternion-valued function of time, valid on [t_min, inf) (tables: on
/// their grid). Immutable after construction.
struct CoeffFn {
    std::variant<CoeffComponents, CoeffTable> impl = CoeffComponents{};
    double t_min = -std::numeric_limits<double>::infinity();

    static CoeffFn zero();
    static CoeffFn constant(const Quat& q);
    static CoeffFn componentwise(std::array<ScalarFn, 4> parts);
    static CoeffFn table(std::vector<double> grid, std::vector<Quat> samples, bool cubic);
};

[[nodiscard]] Quat eval(const CoeffFn& f, double t);
[[nodiscard]] CoeffFn negate(const CoeffFn& f);
[[nodiscard]] bool is_identically_zero(const CoeffFn& f);

/// True when component n (0 = real part) vanishes as a function, judged
/// structurally, not by sampling.
[[nodiscard]] bool component_identically_zero(const CoeffFn& f, int n);

inline constexpr double kQuadTolDefault = 1e-10;

/// Componentwise adaptive quadrature over [t1, t2]. Throws ToleranceNotMet
/// when the interval budget is exhausted above `tol` on any component.
[[nodiscard]] Quat integrate(const CoeffFn& f, double t1, double t2,
                             double tol = kQuadTolDefault);

struct ImproperIntegral {
    Quat value;          // integral over [t1, horizon]
    TailEstimate tail;   // behaviour of the discarded tail, worst component
};

/// Truncated improper integral with a structural estimate of the tail.
[[nodiscard]] ImproperIntegral integrate_to_infinity(const CoeffFn& f, double t1,
                                                     double horizon,
                                                     double tol = kQuadTolDefault);

/// Coefficient quadruple (a, b, c, d) of a quaternionic Riccati equation
/// q' + q a q + b q + q c + d = 0 on [t0, inf).
struct CoeffSet {
    CoeffFn a, b, c, d;
    double t0 = 0.0;
};

// ---------------------------------------------------------------------------
// JSON round trip. Parse errors throw SchemaError carrying the field path.
// ---------------------------------------------------------------------------

[[nodiscard]] ScalarFn parse_scalar_fn(const nlohmann::json& j, const std::string& path);
[[nodiscard]] CoeffFn parse_coeff_fn(const nlohmann::json& j, const std::string& path);
[[nodiscard]] CoeffSet parse_coeff_set(const nlohmann::json& j, const std::string& path);

[[nodiscard]] nlohmann::ordered_json serialize(const ScalarFn& f);
[[nodiscard]] nlohmann::ordered_json serialize(const CoeffFn& f);
[[nodiscard]] nlohmann::ordered_json serialize(const CoeffSet& s);

[[nodiscard]] Quat parse_quat(const nlohmann::json& j, const std::string& path);

}  // namespace qr
