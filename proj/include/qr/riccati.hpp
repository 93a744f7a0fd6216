#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qr/coeffs.hpp"
#include "qr/ode.hpp"
#include "qr/quaternion.hpp"

namespace qr {

/// Right-hand side of q' = -(q a q + b q + q c + d) at time t.
[[nodiscard]] Quat riccati_rhs(const CoeffSet& cs, double t, const Quat& q);

/// |q' - rhs| at t for a candidate solution given as a callable, with the
/// derivative taken numerically inside [lo, hi]. Zero for exact solutions up
/// to the stencil error.
[[nodiscard]] double solution_residual(const CoeffSet& cs,
                                       const std::function<Quat(double)>& q, double t,
                                       double h = 1e-3,
                                       double lo = -std::numeric_limits<double>::infinity(),
                                       double hi = std::numeric_limits<double>::infinity());

// ---------------------------------------------------------------------------
// A solution together with its companion functions and running integrals.
//
// The companions solve
//     phi' = (a q + c) phi,   psi' = psi (b + q a),   phi(t1) = psi(t1) = 1,
// and three integrals accumulate alongside:
//     mu(t)      = integral of phi^-1 a psi^-1          (quaternion)
//     log|phi|   = integral of Re[a q + c]              (scalar)
//     log|psi|   = integral of Re[a q + b]              (scalar)
// ---------------------------------------------------------------------------

class RiccatiSolution {
  public:
    [[nodiscard]] Quat q(double t) const;
    [[nodiscard]] Quat phi(double t) const;
    [[nodiscard]] Quat psi(double t) const;
    [[nodiscard]] Quat mu(double t) const;
    /// Accumulated integral of Re[a q + c]; exp of it predicts |phi|.
    [[nodiscard]] double log_phi_modulus(double t) const;
    /// Accumulated integral of Re[a q + b]; exp of it predicts |psi|.
    [[nodiscard]] double log_psi_modulus(double t) const;

    [[nodiscard]] double t1() const { return t1_; }
    [[nodiscard]] double t_end() const { return traj_.t_end(); }
    [[nodiscard]] SolveStatus status() const { return traj_.status(); }
    [[nodiscard]] std::optional<double> escape_time() const { return traj_.escape_time(); }
    [[nodiscard]] const Quat& seed() const { return seed_; }
    [[nodiscard]] const Trajectory& trajectory() const { return traj_; }
    [[nodiscard]] const CoeffSet& coeffs() const { return cs_; }

  private:
    friend RiccatiSolution solve_riccati(const CoeffSet&, const Quat&, double, double,
                                         double, double, double);
    friend RiccatiSolution solve_riccati_along_path(const CoeffSet&,
                                                    const std::function<Quat(double)>&,
                                                    double, double, double, double);
    Trajectory traj_;
    double t1_ = 0.0;
    Quat seed_;
    CoeffSet cs_;
    // Along-path runs carry q outside the state vector.
    std::function<Quat(double)> path_;
    int q_offset_ = 0;  // -1 when q comes from path_
    int phi_offset_ = 4;
};

/// Integrate the equation plus companions from q(t1) = seed up to t_end.
/// Escape and stiffness are reported through status(), not exceptions.
[[nodiscard]] RiccatiSolution solve_riccati(const CoeffSet& cs, const Quat& seed,
                                            double t1, double t_end,
                                            double rtol = kRtolDefault,
                                            double atol = kAtolDefault,
                                            double escape_norm = kEscapeNormDefault);

/// Companions and integrals along a prescribed solution path q(t). Used where
/// direct integration of q is badly conditioned but q is known another way.
[[nodiscard]] RiccatiSolution solve_riccati_along_path(
    const CoeffSet& cs, const std::function<Quat(double)>& q_path, double t1,
    double t_end, double rtol = kRtolDefault, double atol = kAtolDefault);

// ---------------------------------------------------------------------------
// The solution family through a base solution.
// ---------------------------------------------------------------------------

inline constexpr double kFamilyDenomTol = 1e-12;

/// |1 + lambda mu(t)| for the family member with offset lambda at t1.
[[nodiscard]] double family_denominator(const RiccatiSolution& base, const Quat& lambda,
                                        double t);

/// Value at t of the family member whose initial value is base.q(t1) + lambda:
///     q_lambda = q + psi^-1 [1 + lambda mu]^-1 lambda phi^-1.
/// Throws FamilySingular when the denominator modulus falls below tol.
[[nodiscard]] Quat family_member(const RiccatiSolution& base, const Quat& lambda,
                                 double t, double tol = kFamilyDenomTol);

// Pairwise modulus identities between two solutions of the same equation.
// Each returns a relative deviation that should vanish for exact solutions.

/// | |phi(t)| - exp(log_phi_modulus(t)) | / exp(...)
[[nodiscard]] double phi_modulus_identity_error(const RiccatiSolution& sol, double t);
/// Same for psi.
[[nodiscard]] double psi_modulus_identity_error(const RiccatiSolution& sol, double t);
/// |1 + (q_m(t1) - q_s(t1)) mu_s(t)| against exp of the accumulated
/// difference integral Re[a (q_m - q_s)].
[[nodiscard]] double pair_modulus_identity_error(const RiccatiSolution& m,
                                                 const RiccatiSolution& s, double t);
/// Product of the two opposite pair denominators; equals 1 for solutions.
[[nodiscard]] double pair_product_identity_error(const RiccatiSolution& m,
                                                 const RiccatiSolution& s, double t);

// ---------------------------------------------------------------------------
// Tail integral nu(t) = integral_t^inf phi^-1 a psi^-1, its diagnosis, and
// the limit solution built from it.
// ---------------------------------------------------------------------------

enum class WindowVerdict { Converged, DivergesToInfinity, Oscillatory, Unknown };

[[nodiscard]] const char* to_string(WindowVerdict v);

struct WindowDiagnosis {
    WindowVerdict verdict = WindowVerdict::Unknown;
    std::vector<double> magnitudes;  // |path| at the window boundaries
    std::vector<double> increments;  // |increment| over each window
};

/// Classify end behaviour from precomputed window-boundary data: magnitudes
/// at the boundaries (one more entry than windows) and the per-window
/// increment sizes.
[[nodiscard]] WindowDiagnosis diagnose_window_values(std::vector<double> magnitudes,
                                                     std::vector<double> increments,
                                                     double tail_tol = 1e-7);

/// Split [lo, hi] into `windows` equal windows and classify the end behaviour
/// of the path from the boundary samples alone.
[[nodiscard]] WindowDiagnosis diagnose_windows(const std::function<Quat(double)>& path,
                                               double lo, double hi, int windows = 16,
                                               double tail_tol = 1e-7);

inline constexpr double kNuZeroTol = 1e-8;

struct NuAnalysis {
    Quat nu_t1;                    // nu at the left endpoint
    WindowDiagnosis mu_windows;    // convergence behaviour of mu
    std::vector<double> zeros;     // times in the scan range where |nu| ~ 0
    double scan_end = 0.0;         // right edge of the zero scan
    double min_abs_nu = 0.0;       // smallest |nu| seen in the scan range
};

/// Diagnose the tail integral of a finished run. nu is computed against the
/// run horizon, so the last 5% of the span is excluded from the zero scan:
/// there the truncated nu vanishes by construction. A dead tail (mu flat to
/// within tol before the scan edge) is recorded as a zero at its onset.
[[nodiscard]] NuAnalysis analyze_nu(const RiccatiSolution& sol,
                                    double nu_zero_tol = kNuZeroTol, int grid = 1000);

/// Reusable limit-solution path  q0 - psi0^-1 nu0^-1 phi0^-1  over a base
/// run. The tail integral nu0(t) = integral of phi0^-1 a psi0^-1 from t to
/// the base horizon is integrated once, backward from the horizon, so its
/// relative accuracy survives even when nu0 decays through many orders of
/// magnitude. Holds a pointer to the base run: the base must outlive the
/// path.
class LimitPath {
public:
    [[nodiscard]] Quat nu(double t) const;
    /// Throws NuVanishes when |nu(t)| <= floor.
    [[nodiscard]] Quat q(double t) const;
    [[nodiscard]] double t_begin() const;
    [[nodiscard]] double t_end() const;

private:
    friend LimitPath make_limit_path(const RiccatiSolution& base, double rtol,
                                     double nu_floor);
    const RiccatiSolution* base_ = nullptr;
    std::shared_ptr<const Trajectory> nu_traj_;
    double nu_floor_ = 0.0;
};

[[nodiscard]] LimitPath make_limit_path(const RiccatiSolution& base, double rtol = 1e-12,
                                        double nu_floor = 0.0);

/// Value at t of the limit solution  q0 - psi0^-1 nu0(t)^-1 phi0^-1  built
/// from a base run. Throws NuVanishes when |nu(t)| <= tol. One-shot
/// convenience over make_limit_path.
[[nodiscard]] Quat limit_solution_from_base(const RiccatiSolution& base, double t,
                                            double tol = kNuZeroTol);

// ---------------------------------------------------------------------------
// Per-seed and whole-equation classification from finite-horizon evidence.
// ---------------------------------------------------------------------------

enum class SeedVerdict { Escaped, NormalEvidence, ExtremalCandidate, Indeterminate };
enum class EquationVerdict { Extremal, Normal, SubExtremalNotExtremal, Indeterminate };

[[nodiscard]] const char* to_string(SeedVerdict v);
[[nodiscard]] const char* to_string(EquationVerdict v);

struct ClassifyOptions {
    double plateau_tol = 1e-3;  // sup|mu| growth allowed over the last 10%
    double nu_zero_tol = kNuZeroTol;
    double mu_big = 1e6;        // |mu| beyond this counts as unbounded growth
    int grid = 1000;
    int windows = 16;
    double tail_tol = 1e-7;
};

struct SeedReport {
    Quat seed;
    SeedVerdict verdict = SeedVerdict::Indeterminate;
    SolveStatus status = SolveStatus::ReachedEnd;
    std::optional<double> escape_time;
    double sup_mu = 0.0;     // max |mu| over the whole span
    double sup_mu_90 = 0.0;  // max |mu| over the first 90%
    double mu_final = 0.0;   // |mu| at the horizon
    bool mu_monotone = false;
    std::optional<NuAnalysis> nu;  // absent for escaped / failed runs
};

struct ClassificationReport {
    std::vector<SeedReport> seeds;
    EquationVerdict verdict = EquationVerdict::Indeterminate;
};

/// Integrate every seed to the horizon and classify, per seed and overall.
[[nodiscard]] ClassificationReport classify(const CoeffSet& cs,
                                            const std::vector<Quat>& seeds, double t1,
                                            double horizon, double rtol = kRtolDefault,
                                            double atol = kAtolDefault,
                                            const ClassifyOptions& opt = {});

// ---------------------------------------------------------------------------
// Independent 4x4 route: the same equation under the symbol map, with matrix
// companions and Liouville traces. Used to cross-check the quaternion route.
// ---------------------------------------------------------------------------

class MatrixRiccatiRun {
  public:
    [[nodiscard]] Eigen::Matrix4d Y(double t) const;
    [[nodiscard]] Eigen::Matrix4d Phi(double t) const;
    [[nodiscard]] Eigen::Matrix4d Psi(double t) const;
    /// Accumulated trace integrals predicting det Phi and det Psi.
    [[nodiscard]] double trace_integral_phi(double t) const;
    [[nodiscard]] double trace_integral_psi(double t) const;
    [[nodiscard]] SolveStatus status() const { return traj_.status(); }
    [[nodiscard]] double t_end() const { return traj_.t_end(); }

  private:
    friend MatrixRiccatiRun solve_matrix_riccati(const CoeffSet&, const Quat&, double,
                                                 double, double, double);
    Trajectory traj_;
    double t1_ = 0.0;
};

[[nodiscard]] MatrixRiccatiRun solve_matrix_riccati(const CoeffSet& cs, const Quat& seed,
                                                    double t1, double t_end,
                                                    double rtol = kRtolDefault,
                                                    double atol = kAtolDefault);

/// ||Y - symbol(q)||_inf / (1 + ||Y||_inf) at t, across the two routes.
[[nodiscard]] double symbol_consistency_error(const MatrixRiccatiRun& mat,
                                              const RiccatiSolution& sol, double t);
/// Relative deviation of det Phi from exp(trace integral), and of det Phi
/// from |phi|^4 of the quaternion route.
[[nodiscard]] double det_phi_trace_error(const MatrixRiccatiRun& mat, double t);
[[nodiscard]] double det_psi_trace_error(const MatrixRiccatiRun& mat, double t);
[[nodiscard]] double det_phi_modulus4_error(const MatrixRiccatiRun& mat,
                                            const RiccatiSolution& sol, double t);

}  // namespace qr
