#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qr/coeffs.hpp"
#include "qr/derivative.hpp"
#include "qr/ode.hpp"
#include "qr/quaternion.hpp"
#include "qr/riccati.hpp"

namespace qr {

/// First-order linear pair
///   phi' = a11 phi + a12 psi,
///   psi' = a21 phi + a22 psi
/// with quaternion-valued coefficients acting from the left, on [t0, inf).
struct SystemCoeffs {
    CoeffFn a11, a12, a21, a22;
    double t0 = 0.0;
};

[[nodiscard]] SystemCoeffs parse_system_coeffs(const nlohmann::json& j,
                                               const std::string& path);
[[nodiscard]] nlohmann::ordered_json serialize(const SystemCoeffs& s);

/// Coefficients of the equation solved by the quotient q = psi phi^{-1}
/// wherever phi is invertible: a = a12, b = -a22, c = a11, d = -a21.
[[nodiscard]] CoeffSet to_riccati(const SystemCoeffs& sys);

/// Residual of the pair equations for candidate paths, with numerically
/// differentiated left-hand sides: the larger of the two equation residuals
/// at t. Zero for exact solutions up to the stencil error.
[[nodiscard]] double system_residual(const SystemCoeffs& sys,
                                     const std::function<Quat(double)>& phi,
                                     const std::function<Quat(double)>& psi, double t,
                                     double h = kFdStepDefault,
                                     double lo = -std::numeric_limits<double>::infinity(),
                                     double hi = std::numeric_limits<double>::infinity());

/// One solution pair: either integrated directly from initial values, or
/// rebuilt from a prescribed quotient path via phi' = [a12 q + a11] phi,
/// psi = q phi. Escape cutoff is disabled; linear growth is legitimate.
class SystemSolution {
  public:
    [[nodiscard]] Quat phi(double t) const;
    [[nodiscard]] Quat psi(double t) const;
    /// psi(t) phi(t)^{-1}. Throws PhiVanishes when |phi(t)| <= 1e-12.
    [[nodiscard]] Quat q(double t) const;
    /// Integral of Re[a12 q + a11] from t1 to t along the pair. Meaningful
    /// only while phi stays away from zero.
    [[nodiscard]] double log_phi_growth(double t) const;
    /// Relative gap between |phi(t)| and |phi(t1)| exp(log_phi_growth(t)).
    [[nodiscard]] double modulus_identity_error(double t) const;

    [[nodiscard]] double t1() const { return t1_; }
    [[nodiscard]] double t_end() const { return traj_.t_end(); }
    [[nodiscard]] SolveStatus status() const { return traj_.status(); }
    [[nodiscard]] const Quat& phi_start() const { return phi1_; }
    [[nodiscard]] const Quat& psi_start() const { return psi1_; }

  private:
    friend SystemSolution solve_system(const SystemCoeffs&, const Quat&, const Quat&,
                                       double, double, double, double);
    friend SystemSolution lift_pair(const SystemCoeffs&, const std::function<Quat(double)>&,
                                    const Quat&, double, double, double, double);
    Trajectory traj_;
    double t1_ = 0.0;
    Quat phi1_, psi1_;
    std::function<Quat(double)> q_path_;  // set in lifted mode
};

[[nodiscard]] SystemSolution solve_system(const SystemCoeffs& sys, const Quat& phi1,
                                          const Quat& psi1, double t1, double t_end,
                                          double rtol = kRtolDefault,
                                          double atol = kAtolDefault);

/// Rebuild the pair determined by a quotient path and phi(t1). The quotient
/// may come from a direct equation run or from a limit-solution path; the
/// construction only integrates the phi factor, so it stays accurate where
/// direct pair integration would lose the recessive direction to cancellation.
[[nodiscard]] SystemSolution lift_pair(const SystemCoeffs& sys,
                                       const std::function<Quat(double)>& q_path,
                                       const Quat& phi1, double t1, double t_end,
                                       double rtol = kRtolDefault,
                                       double atol = kAtolDefault);

// ---------------------------------------------------------------------------
// Structural normal-or-extremal test: a componentwise sign condition plus
// discriminant bounds on the quotient-equation coefficients, and a weighted
// integrability condition on a12.
// ---------------------------------------------------------------------------

/// Sign convention for the cross terms p_{nm} = b_m +- c_m entering the
/// discriminants. The two published readings of the table differ in exactly
/// one entry (row 3, column 3); both are evaluated and reported side by side
/// rather than guessing which one was meant.
enum class CrossSigns {
    AsPrinted,    // row 3 takes the minus sign in every column
    Symmetrized,  // plus exactly on the diagonal and on row 0, minus off it
};

[[nodiscard]] const char* to_string(CrossSigns v);

struct AlphaComponentReport {
    bool in_index_set = false;
    bool vanishes = false;  // structurally zero component of a12
    double min_coeff = std::numeric_limits<double>::infinity();
    double min_coeff_at = std::numeric_limits<double>::quiet_NaN();
    double max_discriminant = -std::numeric_limits<double>::infinity();
    double max_discriminant_at = std::numeric_limits<double>::quiet_NaN();
    double max_zero_point_gap = 0.0;  // |p_nm| where the coefficient touches zero
};

struct AlphaReport {
    std::array<AlphaComponentReport, 4> components;
    bool domain_ok = false;  // complement members vanish structurally
    bool signs_ok = false;
    bool zero_points_ok = false;
    bool discriminants_ok = false;
    bool holds = false;
};

struct Thm42Options {
    int grid = 2000;       // scan resolution for the pointwise conditions
    double tol = 1e-10;    // slack on the weak inequalities
    int windows = 16;      // windows for the integrability diagnosis
    double tail_tol = 1e-7;
    double rtol = kRtolDefault;
    double atol = kAtolDefault;
};

/// Pointwise scan of the sign and discriminant conditions over [t1, horizon]
/// for the split {index_set, complement} of the components of a12. Grid scan
/// with local refinement around minima and sign touches.
[[nodiscard]] AlphaReport alpha_check(const SystemCoeffs& sys,
                                      const std::vector<int>& index_set, double t1,
                                      double horizon, CrossSigns signs,
                                      const Thm42Options& opt = {});

struct BetaReport {
    WindowDiagnosis windows;  // partial integrals of |a12| e^{int Re(a22 - a11)}
    double value = 0.0;       // integral over [t1, horizon]
    bool converges = false;
};

[[nodiscard]] BetaReport beta_check(const SystemCoeffs& sys, double t1, double horizon,
                                    const Thm42Options& opt = {});

enum class Thm42Verdict { NormalOrExtremal, HypothesesFail };

[[nodiscard]] const char* to_string(Thm42Verdict v);

struct Thm42Report {
    AlphaReport alpha_printed;      // cross terms as printed
    AlphaReport alpha_symmetrized;  // diagonal-sign variant
    BetaReport beta;
    Thm42Verdict verdict = Thm42Verdict::HypothesesFail;  // printed table + beta
    Thm42Verdict verdict_symmetrized = Thm42Verdict::HypothesesFail;
    std::vector<int> index_set;
};

[[nodiscard]] Thm42Report thm42_check(const SystemCoeffs& sys,
                                      const std::vector<int>& index_set, double t1,
                                      double horizon, const Thm42Options& opt = {});

struct SignPatternReport {
    double worst = 0.0;  // most negative checked component value
    int worst_component = -1;
    double worst_at = std::numeric_limits<double>::quiet_NaN();
    bool holds = false;
    SolveStatus status = SolveStatus::ReachedEnd;
};

/// Solves the quotient equation from seed zero and verifies the sign pattern
/// the structural conditions guarantee: the real part stays >= 0 when 0 is
/// in the index set, and -q_n stays >= 0 for each imaginary member n.
[[nodiscard]] SignPatternReport sign_pattern_check(const SystemCoeffs& sys,
                                                   const std::vector<int>& index_set,
                                                   double t1, double horizon,
                                                   double rtol = kRtolDefault,
                                                   double atol = kAtolDefault,
                                                   int grid = 2000, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Principal-solution diagnostics.
// ---------------------------------------------------------------------------

struct Statement2Report {
    WindowDiagnosis windows;  // partial sums of the weighted tail integrand
    double value = 0.0;       // integral over [T, horizon]
    std::vector<double> partials;
};

/// Windowed quadrature of |a12(s)| / |phi(s)|^2 * exp(int_T^s Re[a11 + a22])
/// along the pair, with a convergence verdict on the partial sums. Finite for
/// non-principal pairs, divergent exactly for the principal one.
[[nodiscard]] Statement2Report statement2_integral(const SystemCoeffs& sys,
                                                   const SystemSolution& ssol, double T,
                                                   double horizon, int windows = 16,
                                                   double tail_tol = 1e-7);

enum class RatioTrend { DecreasingToZero, BoundedBothWays, Growing };

[[nodiscard]] const char* to_string(RatioTrend v);

struct RatioSeries {
    std::vector<double> t;
    std::vector<double> ratio;  // |phi_A| / |phi_B|
    bool monotone_nonincreasing = false;
    RatioTrend trend = RatioTrend::BoundedBothWays;
    /// Largest |ratio - final| / final over grid points with t >= t_from.
    [[nodiscard]] double max_rel_drift_from(double t_from) const;
};

/// |phi_A| / |phi_B| sampled on the grid, with a coarse trend verdict:
/// final <= 1e-3 * initial reads as decay to zero, >= 1e3 * initial as
/// growth, anything else as bounded both ways.
[[nodiscard]] RatioSeries phi_ratio(const std::function<double(double)>& abs_phi_a,
                                    const std::function<double(double)>& abs_phi_b,
                                    const std::vector<double>& grid);

}  // namespace qr
