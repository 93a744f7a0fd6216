#include "qr/riccati.hpp"

#include <algorithm>
#include <cmath>

#include "qr/derivative.hpp"

namespace qr {
namespace {

// Values of |phi| or |psi| below this make the mu integrand meaningless;
// the contribution is dropped rather than divided through.
constexpr double kCompanionFloor = 1e-150;

Quat quat_at(const Eigen::VectorXd& y, int offset) {
    return {y(offset), y(offset + 1), y(offset + 2), y(offset + 3)};
}

void write_quat(Eigen::VectorXd& y, int offset, const Quat& q) {
    y(offset) = q.w;
    y(offset + 1) = q.x;
    y(offset + 2) = q.y;
    y(offset + 3) = q.z;
}

std::vector<Accumulator> companion_accumulators(const CoeffSet& cs,
                                                const std::function<Quat(double, const Eigen::VectorXd&)>& q_of,
                                                int phi_offset) {
    std::vector<Accumulator> acc;
    acc.push_back({"mu", 4, [cs, phi_offset](double t, const Eigen::VectorXd& y, double* out) {
                       const Quat phi = quat_at(y, phi_offset);
                       const Quat psi = quat_at(y, phi_offset + 4);
                       if (phi.norm() < kCompanionFloor || psi.norm() < kCompanionFloor) {
                           out[0] = out[1] = out[2] = out[3] = 0.0;
                           return;
                       }
                       const Quat v = inverse(phi) * eval(cs.a, t) * inverse(psi);
                       for (int n = 0; n < 4; ++n) out[n] = v[n];
                   }});
    acc.push_back({"log_phi", 1, [cs, q_of](double t, const Eigen::VectorXd& y, double* out) {
                       out[0] = (eval(cs.a, t) * q_of(t, y)).re() + eval(cs.c, t).re();
                   }});
    acc.push_back({"log_psi", 1, [cs, q_of](double t, const Eigen::VectorXd& y, double* out) {
                       out[0] = (eval(cs.a, t) * q_of(t, y)).re() + eval(cs.b, t).re();
                   }});
    return acc;
}

}  // namespace

Quat riccati_rhs(const CoeffSet& cs, double t, const Quat& q) {
    const Quat a = eval(cs.a, t), b = eval(cs.b, t), c = eval(cs.c, t), d = eval(cs.d, t);
    return -(q * a * q + b * q + q * c + d);
}

double solution_residual(const CoeffSet& cs, const std::function<Quat(double)>& q, double t,
                         double h, double lo, double hi) {
    const Quat deriv = fd_derivative(q, t, h, lo, hi);
    return (deriv - riccati_rhs(cs, t, q(t))).norm();
}

Quat RiccatiSolution::q(double t) const {
    if (q_offset_ < 0) return path_(t);
    return quat_at(traj_.query(t), q_offset_);
}

Quat RiccatiSolution::phi(double t) const { return quat_at(traj_.query(t), phi_offset_); }

Quat RiccatiSolution::psi(double t) const { return quat_at(traj_.query(t), phi_offset_ + 4); }

Quat RiccatiSolution::mu(double t) const {
    const Eigen::VectorXd v = traj_.query_accumulator("mu", t);
    return {v(0), v(1), v(2), v(3)};
}

double RiccatiSolution::log_phi_modulus(double t) const {
    return traj_.query_accumulator("log_phi", t)(0);
}

double RiccatiSolution::log_psi_modulus(double t) const {
    return traj_.query_accumulator("log_psi", t)(0);
}

RiccatiSolution solve_riccati(const CoeffSet& cs, const Quat& seed, double t1,
                              double t_end, double rtol, double atol,
                              double escape_norm) {
    OdeProblem p;
    p.dimension = 12;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Zero(12);
    write_quat(p.y0, 0, seed);
    write_quat(p.y0, 4, Quat::one());
    write_quat(p.y0, 8, Quat::one());
    p.escape_norm = escape_norm;
    p.escape_dims = 4;  // only q can blow up in finite time
    p.rhs = [cs](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Quat q = quat_at(y, 0), phi = quat_at(y, 4), psi = quat_at(y, 8);
        const Quat a = eval(cs.a, t), b = eval(cs.b, t), c = eval(cs.c, t),
                   d = eval(cs.d, t);
        write_quat(dy, 0, -(q * a * q + b * q + q * c + d));
        write_quat(dy, 4, (a * q + c) * phi);
        write_quat(dy, 8, psi * (b + q * a));
    };
    auto q_of = [](double, const Eigen::VectorXd& y) { return quat_at(y, 0); };
    RiccatiSolution out;
    out.traj_ = solve(p, t_end, rtol, atol, companion_accumulators(cs, q_of, 4));
    out.t1_ = t1;
    out.seed_ = seed;
    out.cs_ = cs;
    out.q_offset_ = 0;
    out.phi_offset_ = 4;
    return out;
}

RiccatiSolution solve_riccati_along_path(const CoeffSet& cs,
                                         const std::function<Quat(double)>& q_path,
                                         double t1, double t_end, double rtol,
                                         double atol) {
    OdeProblem p;
    p.dimension = 8;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Zero(8);
    write_quat(p.y0, 0, Quat::one());
    write_quat(p.y0, 4, Quat::one());
    p.escape_norm = 1e300;  // companions are linear in the state: no finite-time escape
    p.rhs = [cs, q_path](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Quat phi = quat_at(y, 0), psi = quat_at(y, 4);
        const Quat q = q_path(t);
        const Quat a = eval(cs.a, t), b = eval(cs.b, t), c = eval(cs.c, t);
        write_quat(dy, 0, (a * q + c) * phi);
        write_quat(dy, 4, psi * (b + q * a));
    };
    auto q_of = [q_path](double t, const Eigen::VectorXd&) { return q_path(t); };
    RiccatiSolution out;
    out.traj_ = solve(p, t_end, rtol, atol, companion_accumulators(cs, q_of, 0));
    out.t1_ = t1;
    out.seed_ = q_path(t1);
    out.cs_ = cs;
    out.path_ = q_path;
    out.q_offset_ = -1;
    out.phi_offset_ = 0;
    return out;
}

// ---------------------------------------------------------------------------

double family_denominator(const RiccatiSolution& base, const Quat& lambda, double t) {
    return (Quat::one() + lambda * base.mu(t)).norm();
}

Quat family_member(const RiccatiSolution& base, const Quat& lambda, double t,
                   double tol) {
    const Quat denom = Quat::one() + lambda * base.mu(t);
    if (denom.norm() <= tol)
        throw FamilySingular("family member has a pole at the requested time");
    return base.q(t) + inverse(base.psi(t)) * inverse(denom) * lambda *
                           inverse(base.phi(t));
}

double phi_modulus_identity_error(const RiccatiSolution& sol, double t) {
    const double predicted = std::exp(sol.log_phi_modulus(t));
    return std::abs(sol.phi(t).norm() - predicted) / std::max(predicted, 1e-300);
}

double psi_modulus_identity_error(const RiccatiSolution& sol, double t) {
    const double predicted = std::exp(sol.log_psi_modulus(t));
    return std::abs(sol.psi(t).norm() - predicted) / std::max(predicted, 1e-300);
}

double pair_modulus_identity_error(const RiccatiSolution& m, const RiccatiSolution& s,
                                   double t) {
    if (m.t1() != s.t1())
        throw OutOfDomain("pair identity needs solutions anchored at the same time");
    const Quat lambda = m.seed() - s.seed();
    const double lhs = family_denominator(s, lambda, t);
    const double rhs = std::exp(m.log_phi_modulus(t) - s.log_phi_modulus(t));
    return std::abs(lhs - rhs) / std::max(rhs, 1e-300);
}

double pair_product_identity_error(const RiccatiSolution& m, const RiccatiSolution& s,
                                   double t) {
    if (m.t1() != s.t1())
        throw OutOfDomain("pair identity needs solutions anchored at the same time");
    const Quat lambda = m.seed() - s.seed();
    return std::abs(family_denominator(s, lambda, t) *
                        family_denominator(m, -lambda, t) -
                    1.0);
}

// ---------------------------------------------------------------------------

const char* to_string(WindowVerdict v) {
    switch (v) {
        case WindowVerdict::Converged: return "converged";
        case WindowVerdict::DivergesToInfinity: return "diverges-to-infinity";
        case WindowVerdict::Oscillatory: return "oscillatory";
        default: return "unknown";
    }
}

WindowDiagnosis diagnose_window_values(std::vector<double> magnitudes,
                                       std::vector<double> increments, double tail_tol) {
    WindowDiagnosis out;
    out.magnitudes = std::move(magnitudes);
    out.increments = std::move(increments);
    const int k = static_cast<int>(out.increments.size());
    if (k < 4 || out.magnitudes.size() != out.increments.size() + 1)
        throw OutOfRange("window diagnosis needs >= 4 windows and k+1 boundary values");

    const int quarter = std::max(k / 4, 1);
    double last_quarter_max = 0.0;
    for (int i = k - quarter; i < k; ++i) last_quarter_max = std::max(last_quarter_max, out.increments[i]);

    // Settled: the final increment is below tolerance and increments decay
    // across the last quarter (slack absorbs roundoff jitter and damped
    // oscillation around a geometric envelope).
    bool tail_decays = true;
    for (int i = k - quarter; i < k; ++i) {
        if (out.increments[i] >
            std::max(2.0 * out.increments[i - 1], out.increments[i - 1] + 0.1 * tail_tol))
            tail_decays = false;
    }
    if (out.increments.back() < tail_tol && tail_decays) {
        out.verdict = WindowVerdict::Converged;
        return out;
    }

    auto nondecreasing = [](const std::vector<double>& v) {
        for (size_t i = 1; i < v.size(); ++i)
            if (v[i] < v[i - 1] * (1.0 - 1e-9) - 1e-12) return false;
        return true;
    };
    const bool mags_grow = nondecreasing(out.magnitudes);
    if (mags_grow && (out.magnitudes.back() > 1.0 / tail_tol ||
                      (nondecreasing(out.increments) &&
                       out.magnitudes.back() > 1e3 * tail_tol))) {
        out.verdict = WindowVerdict::DivergesToInfinity;
        return out;
    }
    if (!mags_grow && last_quarter_max >= tail_tol) {
        out.verdict = WindowVerdict::Oscillatory;
        return out;
    }
    out.verdict = WindowVerdict::Unknown;
    return out;
}

WindowDiagnosis diagnose_windows(const std::function<Quat(double)>& path, double lo,
                                 double hi, int windows, double tail_tol) {
    const int k = std::max(windows, 4);
    std::vector<Quat> values;
    values.reserve(k + 1);
    for (int i = 0; i <= k; ++i) values.push_back(path(lo + (hi - lo) * i / k));
    std::vector<double> magnitudes, increments;
    for (int i = 0; i <= k; ++i) magnitudes.push_back(values[i].norm());
    for (int i = 1; i <= k; ++i) increments.push_back((values[i] - values[i - 1]).norm());
    return diagnose_window_values(std::move(magnitudes), std::move(increments), tail_tol);
}

NuAnalysis analyze_nu(const RiccatiSolution& sol, double nu_zero_tol, int grid) {
    const double t1 = sol.t1(), horizon = sol.t_end();
    const LimitPath tail = make_limit_path(sol);
    NuAnalysis out;
    out.nu_t1 = tail.nu(t1);
    out.scan_end = t1 + 0.95 * (horizon - t1);
    out.mu_windows = diagnose_windows([&sol](double s) { return sol.mu(s); }, t1,
                                      horizon);

    const int g = std::max(grid, 16);
    std::vector<double> ts(g + 1);
    std::vector<Quat> mu_vals(g + 1);
    std::vector<double> mags(g + 1);
    for (int i = 0; i <= g; ++i) {
        ts[i] = t1 + (out.scan_end - t1) * i / g;
        mu_vals[i] = sol.mu(ts[i]);
        mags[i] = tail.nu(ts[i]).norm();
    }
    out.min_abs_nu = *std::min_element(mags.begin(), mags.end());

    auto abs_nu = [&tail](double s) { return tail.nu(s).norm(); };

    // Onsets of |nu| dipping below tolerance, refined by bisection on the
    // crossing of the threshold.
    if (mags[0] < nu_zero_tol) out.zeros.push_back(ts[0]);
    for (int i = 1; i <= g; ++i) {
        if (mags[i] >= nu_zero_tol || mags[i - 1] < nu_zero_tol) continue;
        double a = ts[i - 1], b = ts[i];
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (a + b);
            (abs_nu(mid) >= nu_zero_tol ? a : b) = mid;
        }
        out.zeros.push_back(0.5 * (a + b));
    }

    // Dead tail: once mu has zero total variation (to within tol) from some
    // point to the horizon, nu is structurally zero beyond that point even if
    // the scan above missed it.
    std::vector<double> tv(g + 1, 0.0);
    tv[g] = (sol.mu(horizon) - mu_vals[g]).norm();
    for (int i = g; i-- > 0;) tv[i] = tv[i + 1] + (mu_vals[i + 1] - mu_vals[i]).norm();
    for (int i = 0; i <= g; ++i) {
        if (tv[i] >= nu_zero_tol) continue;
        if (mags[i] < nu_zero_tol &&
            (out.zeros.empty() || out.zeros.back() < ts[i] - (ts[1] - ts[0])))
            out.zeros.push_back(ts[i]);
        break;
    }
    return out;
}

Quat LimitPath::nu(double t) const { return quat_at(nu_traj_->query(t), 0); }

namespace {

// The tail integral is exponentially small yet meaningful deep into the
// interval, far below the generic invertibility threshold. Invert scaled so
// relative accuracy survives down to the underflow boundary.
Quat tiny_inverse(const Quat& q) {
    const double m = std::max({std::abs(q.w), std::abs(q.x), std::abs(q.y), std::abs(q.z)});
    if (m == 0.0) throw NearZeroDivisor("exact zero inside the limit-solution formula");
    const Quat s = q * (1.0 / m);
    return s.conjugate() * (1.0 / (s.squared_norm() * m));
}

double underflow_safe_norm(const Quat& q) {
    const double m = std::max({std::abs(q.w), std::abs(q.x), std::abs(q.y), std::abs(q.z)});
    return m == 0.0 ? 0.0 : m * (q * (1.0 / m)).norm();
}

}  // namespace

Quat LimitPath::q(double t) const {
    const Quat n = nu(t);
    if (underflow_safe_norm(n) <= nu_floor_)
        throw NuVanishes("tail integral vanishes; the limit solution is undefined here");
    return base_->q(t) -
           tiny_inverse(base_->psi(t)) * tiny_inverse(n) * tiny_inverse(base_->phi(t));
}

double LimitPath::t_begin() const { return base_->t1(); }

double LimitPath::t_end() const { return base_->t_end(); }

LimitPath make_limit_path(const RiccatiSolution& base, double rtol, double nu_floor) {
    OdeProblem p;
    p.dimension = 4;
    p.t0 = base.t_end();
    p.y0 = Eigen::VectorXd::Zero(4);
    p.escape_norm = 1e300;
    p.rhs = [&base](double t, const Eigen::VectorXd&, Eigen::VectorXd& dy) {
        const Quat phi = base.phi(t), psi = base.psi(t);
        Quat f = Quat::zero();
        if (phi.norm() >= kCompanionFloor && psi.norm() >= kCompanionFloor)
            f = inverse(phi) * eval(base.coeffs().a, t) * inverse(psi);
        // Running from the horizon toward t1, so the stored state is the
        // integral over [t, horizon] of +integrand.
        write_quat(dy, 0, -f);
    };
    // Absolute floor far below any representable tail keeps the control
    // relative even for tails that decay through hundreds of orders.
    Trajectory traj = solve(p, base.t1(), rtol, 1e-300, {});
    LimitPath out;
    out.base_ = &base;
    out.nu_traj_ = std::make_shared<const Trajectory>(std::move(traj));
    out.nu_floor_ = nu_floor;
    return out;
}

Quat limit_solution_from_base(const RiccatiSolution& base, double t, double tol) {
    return make_limit_path(base, 1e-12, tol).q(t);
}

// ---------------------------------------------------------------------------

const char* to_string(SeedVerdict v) {
    switch (v) {
        case SeedVerdict::Escaped: return "escaped";
        case SeedVerdict::NormalEvidence: return "normal-evidence";
        case SeedVerdict::ExtremalCandidate: return "extremal-candidate";
        default: return "indeterminate";
    }
}

const char* to_string(EquationVerdict v) {
    switch (v) {
        case EquationVerdict::Extremal: return "extremal";
        case EquationVerdict::Normal: return "normal";
        case EquationVerdict::SubExtremalNotExtremal: return "sub-extremal-non-extremal";
        default: return "indeterminate";
    }
}

ClassificationReport classify(const CoeffSet& cs, const std::vector<Quat>& seeds,
                              double t1, double horizon, double rtol, double atol,
                              const ClassifyOptions& opt) {
    ClassificationReport report;
    for (const Quat& seed : seeds) {
        SeedReport sr;
        sr.seed = seed;
        const RiccatiSolution sol = solve_riccati(cs, seed, t1, horizon, rtol, atol);
        sr.status = sol.status();
        sr.escape_time = sol.escape_time();
        if (sol.status() == SolveStatus::Escaped) {
            sr.verdict = SeedVerdict::Escaped;
            report.seeds.push_back(std::move(sr));
            continue;
        }
        if (sol.status() == SolveStatus::StiffnessFailure) {
            sr.verdict = SeedVerdict::Indeterminate;
            report.seeds.push_back(std::move(sr));
            continue;
        }

        const int g = std::max(opt.grid, 16);
        bool monotone = true;
        double prev = 0.0;
        for (int i = 0; i <= g; ++i) {
            const double s = t1 + (horizon - t1) * i / g;
            const double m = sol.mu(s).norm();
            if (i > 0 && m < prev * (1.0 - 1e-9) - 1e-12) monotone = false;
            prev = m;
            sr.sup_mu = std::max(sr.sup_mu, m);
            if (s <= t1 + 0.9 * (horizon - t1)) sr.sup_mu_90 = std::max(sr.sup_mu_90, m);
        }
        sr.mu_final = sol.mu(horizon).norm();
        sr.mu_monotone = monotone;
        sr.nu = analyze_nu(sol, opt.nu_zero_tol, opt.grid);

        const bool plateau =
            sr.sup_mu - sr.sup_mu_90 <= opt.plateau_tol * sr.sup_mu + 1e-12;
        const bool nu_clean =
            sr.nu->mu_windows.verdict == WindowVerdict::Converged && sr.nu->zeros.empty();
        if (plateau) {
            sr.verdict = SeedVerdict::NormalEvidence;
        } else if (nu_clean || (sr.mu_final > opt.mu_big && monotone)) {
            sr.verdict = SeedVerdict::ExtremalCandidate;
        } else {
            sr.verdict = SeedVerdict::Indeterminate;
        }
        report.seeds.push_back(std::move(sr));
    }

    bool any_candidate = false, any_witness = false, any_normal = false,
         any_indeterminate = false;
    for (const SeedReport& sr : report.seeds) {
        any_candidate |= sr.verdict == SeedVerdict::ExtremalCandidate;
        any_indeterminate |= sr.verdict == SeedVerdict::Indeterminate;
        if (sr.verdict == SeedVerdict::NormalEvidence) {
            any_normal = true;
            // A settled solution whose tail integral never vanishes witnesses
            // a limit solution at the family boundary.
            if (sr.nu && sr.nu->mu_windows.verdict == WindowVerdict::Converged &&
                sr.nu->zeros.empty())
                any_witness = true;
        }
    }
    if (any_candidate || any_witness) {
        report.verdict = EquationVerdict::Extremal;
    } else if (any_normal && !any_indeterminate) {
        report.verdict = EquationVerdict::Normal;
    } else if (any_normal) {
        report.verdict = EquationVerdict::SubExtremalNotExtremal;
    } else {
        report.verdict = EquationVerdict::Indeterminate;
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Matrix4d mat_at(const Eigen::VectorXd& y, int offset) {
    return Eigen::Map<const Eigen::Matrix4d>(y.data() + offset);
}

void write_mat(Eigen::VectorXd& y, int offset, const Eigen::Matrix4d& m) {
    Eigen::Map<Eigen::Matrix4d>(y.data() + offset) = m;
}

}  // namespace

Eigen::Matrix4d MatrixRiccatiRun::Y(double t) const { return mat_at(traj_.query(t), 0); }
Eigen::Matrix4d MatrixRiccatiRun::Phi(double t) const { return mat_at(traj_.query(t), 16); }
Eigen::Matrix4d MatrixRiccatiRun::Psi(double t) const { return mat_at(traj_.query(t), 32); }

double MatrixRiccatiRun::trace_integral_phi(double t) const {
    return traj_.query_accumulator("trace_phi", t)(0);
}

double MatrixRiccatiRun::trace_integral_psi(double t) const {
    return traj_.query_accumulator("trace_psi", t)(0);
}

MatrixRiccatiRun solve_matrix_riccati(const CoeffSet& cs, const Quat& seed, double t1,
                                      double t_end, double rtol, double atol) {
    OdeProblem p;
    p.dimension = 48;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Zero(48);
    write_mat(p.y0, 0, symbol(seed));
    write_mat(p.y0, 16, Eigen::Matrix4d::Identity());
    write_mat(p.y0, 32, Eigen::Matrix4d::Identity());
    p.escape_dims = 16;
    p.rhs = [cs](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Eigen::Matrix4d Y = mat_at(y, 0), Phi = mat_at(y, 16), Psi = mat_at(y, 32);
        const Eigen::Matrix4d A = symbol(eval(cs.a, t)), B = symbol(eval(cs.b, t)),
                              C = symbol(eval(cs.c, t)), D = symbol(eval(cs.d, t));
        write_mat(dy, 0, -(Y * A * Y + B * Y + Y * C + D));
        write_mat(dy, 16, (A * Y + C) * Phi);
        write_mat(dy, 32, Psi * (B + Y * A));
    };
    std::vector<Accumulator> acc;
    acc.push_back({"trace_phi", 1, [cs](double t, const Eigen::VectorXd& y, double* out) {
                       const Eigen::Matrix4d AYC =
                           symbol(eval(cs.a, t)) * mat_at(y, 0) + symbol(eval(cs.c, t));
                       out[0] = AYC.trace();
                   }});
    acc.push_back({"trace_psi", 1, [cs](double t, const Eigen::VectorXd& y, double* out) {
                       const Eigen::Matrix4d BYA =
                           symbol(eval(cs.b, t)) + mat_at(y, 0) * symbol(eval(cs.a, t));
                       out[0] = BYA.trace();
                   }});
    MatrixRiccatiRun out;
    out.traj_ = solve(p, t_end, rtol, atol, acc);
    out.t1_ = t1;
    return out;
}

double symbol_consistency_error(const MatrixRiccatiRun& mat, const RiccatiSolution& sol,
                                double t) {
    const Eigen::Matrix4d Y = mat.Y(t);
    const double scale = 1.0 + Y.lpNorm<Eigen::Infinity>();
    return (Y - symbol(sol.q(t))).lpNorm<Eigen::Infinity>() / scale;
}

double det_phi_trace_error(const MatrixRiccatiRun& mat, double t) {
    const double predicted = std::exp(mat.trace_integral_phi(t));
    return std::abs(mat.Phi(t).determinant() - predicted) / std::max(predicted, 1e-300);
}

double det_psi_trace_error(const MatrixRiccatiRun& mat, double t) {
    const double predicted = std::exp(mat.trace_integral_psi(t));
    return std::abs(mat.Psi(t).determinant() - predicted) / std::max(predicted, 1e-300);
}

double det_phi_modulus4_error(const MatrixRiccatiRun& mat, const RiccatiSolution& sol,
                              double t) {
    const double det = mat.Phi(t).determinant();
    const double mod4 = std::pow(sol.phi(t).norm(), 4);
    return std::abs(det - mod4) / std::max(std::abs(det), 1e-300);
}

}  // namespace qr
