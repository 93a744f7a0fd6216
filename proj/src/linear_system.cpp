#include "qr/linear_system.hpp"

#include <algorithm>
#include <cmath>

#include "qr/errors.hpp"
#include "qr/quadrature.hpp"

namespace qr {
namespace {

// Below this |phi| or |psi| the growth integrand is meaningless; the
// contribution is dropped rather than divided through.
constexpr double kPairFloor = 1e-150;

Quat quat_at(const Eigen::VectorXd& y, int offset) {
    return {y(offset), y(offset + 1), y(offset + 2), y(offset + 3)};
}

void write_quat(Eigen::VectorXd& y, int offset, const Quat& q) {
    y(offset) = q.w;
    y(offset + 1) = q.x;
    y(offset + 2) = q.y;
    y(offset + 3) = q.z;
}

double require_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

// Sign in front of c_m in the cross term p_{nm}. Rows 1 and 2 agree between
// the two conventions; they split on row 3.
double cross_sign(CrossSigns v, int n, int m) {
    if (n == 0) return 1.0;
    if (v == CrossSigns::AsPrinted && n == 3) return -1.0;
    return m == n ? 1.0 : -1.0;
}

// Quadrature of a scalar function with the tolerance anchored to a one-panel
// pilot estimate, so exponentially small windows keep relative accuracy.
double scaled_quad(const std::function<double(double)>& f, double lo, double hi) {
    const double pilot = integrate_adaptive(f, lo, hi, 1e300).value;
    const double tol = std::max(std::abs(pilot) * 1e-10, 1e-280);
    return integrate_adaptive(f, lo, hi, tol).value;
}

}  // namespace

SystemCoeffs parse_system_coeffs(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    SystemCoeffs out;
    out.t0 = j.contains("t0") ? require_number(j.at("t0"), path + ".t0") : 0.0;
    auto field = [&](const char* name) -> CoeffFn {
        if (!j.contains(name)) return CoeffFn::zero();
        CoeffFn f = parse_coeff_fn(j.at(name), path + "." + name);
        if (std::holds_alternative<CoeffComponents>(f.impl)) f.t_min = out.t0;
        return f;
    };
    out.a11 = field("a11");
    out.a12 = field("a12");
    out.a21 = field("a21");
    out.a22 = field("a22");
    return out;
}

nlohmann::ordered_json serialize(const SystemCoeffs& s) {
    nlohmann::ordered_json out;
    out["t0"] = s.t0;
    out["a11"] = serialize(s.a11);
    out["a12"] = serialize(s.a12);
    out["a21"] = serialize(s.a21);
    out["a22"] = serialize(s.a22);
    return out;
}

CoeffSet to_riccati(const SystemCoeffs& sys) {
    CoeffSet out;
    out.a = sys.a12;
    out.b = negate(sys.a22);
    out.c = sys.a11;
    out.d = negate(sys.a21);
    out.t0 = sys.t0;
    return out;
}

double system_residual(const SystemCoeffs& sys, const std::function<Quat(double)>& phi,
                       const std::function<Quat(double)>& psi, double t, double h,
                       double lo, double hi) {
    const Quat dphi = fd_derivative(phi, t, h, lo, hi);
    const Quat dpsi = fd_derivative(psi, t, h, lo, hi);
    const Quat p = phi(t), s = psi(t);
    const double r1 = (dphi - (eval(sys.a11, t) * p + eval(sys.a12, t) * s)).norm();
    const double r2 = (dpsi - (eval(sys.a21, t) * p + eval(sys.a22, t) * s)).norm();
    return std::max(r1, r2);
}

Quat SystemSolution::phi(double t) const { return quat_at(traj_.query(t), 0); }

Quat SystemSolution::psi(double t) const {
    if (q_path_) return q_path_(t) * phi(t);
    return quat_at(traj_.query(t), 4);
}

Quat SystemSolution::q(double t) const {
    if (q_path_) return q_path_(t);
    const Quat p = phi(t);
    if (p.norm() <= kZeroThreshold)
        throw PhiVanishes("phi vanishes; the quotient is undefined here");
    return psi(t) * inverse(p);
}

double SystemSolution::log_phi_growth(double t) const {
    return traj_.query_accumulator("log_phi", t)(0);
}

double SystemSolution::modulus_identity_error(double t) const {
    const double predicted = phi1_.norm() * std::exp(log_phi_growth(t));
    return std::abs(phi(t).norm() - predicted) / std::max(predicted, 1e-300);
}

SystemSolution solve_system(const SystemCoeffs& sys, const Quat& phi1, const Quat& psi1,
                            double t1, double t_end, double rtol, double atol) {
    OdeProblem p;
    p.dimension = 8;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Zero(8);
    write_quat(p.y0, 0, phi1);
    write_quat(p.y0, 4, psi1);
    p.escape_norm = 1e300;  // linear: no finite-time blow-up
    p.rhs = [sys](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Quat phi = quat_at(y, 0), psi = quat_at(y, 4);
        write_quat(dy, 0, eval(sys.a11, t) * phi + eval(sys.a12, t) * psi);
        write_quat(dy, 4, eval(sys.a21, t) * phi + eval(sys.a22, t) * psi);
    };
    std::vector<Accumulator> acc;
    acc.push_back({"log_phi", 1, [sys](double t, const Eigen::VectorXd& y, double* out) {
                       const Quat phi = quat_at(y, 0), psi = quat_at(y, 4);
                       if (phi.norm() < kPairFloor) {
                           out[0] = 0.0;
                           return;
                       }
                       out[0] = (eval(sys.a12, t) * (psi * inverse(phi))).re() +
                                eval(sys.a11, t).re();
                   }});
    SystemSolution out;
    out.traj_ = solve(p, t_end, rtol, atol, acc);
    out.t1_ = t1;
    out.phi1_ = phi1;
    out.psi1_ = psi1;
    return out;
}

SystemSolution lift_pair(const SystemCoeffs& sys, const std::function<Quat(double)>& q_path,
                         const Quat& phi1, double t1, double t_end, double rtol,
                         double atol) {
    OdeProblem p;
    p.dimension = 4;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Zero(4);
    write_quat(p.y0, 0, phi1);
    p.escape_norm = 1e300;
    p.rhs = [sys, q_path](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        write_quat(dy, 0, (eval(sys.a12, t) * q_path(t) + eval(sys.a11, t)) * quat_at(y, 0));
    };
    std::vector<Accumulator> acc;
    acc.push_back({"log_phi", 1, [sys, q_path](double t, const Eigen::VectorXd&, double* out) {
                       out[0] = (eval(sys.a12, t) * q_path(t)).re() + eval(sys.a11, t).re();
                   }});
    SystemSolution out;
    out.traj_ = solve(p, t_end, rtol, atol, acc);
    out.t1_ = t1;
    out.phi1_ = phi1;
    out.psi1_ = q_path(t1) * phi1;
    out.q_path_ = q_path;
    return out;
}

// ---------------------------------------------------------------------------

const char* to_string(CrossSigns v) {
    return v == CrossSigns::AsPrinted ? "as-printed" : "symmetrized";
}

const char* to_string(Thm42Verdict v) {
    return v == Thm42Verdict::NormalOrExtremal ? "normal-or-extremal" : "hypotheses-fail";
}

namespace {

// Golden-section search for the minimum of f over [a, b].
double golden_min(const std::function<double(double)>& f, double a, double b,
                  double* arg) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    const double x = f1 <= f2 ? x1 : x2;
    if (arg) *arg = x;
    return std::min(f1, f2);
}

struct CrossTermEval {
    const CoeffSet* rc;
    CrossSigns signs;

    double p(int n, int m, double t) const {
        return eval(rc->b, t)[m] + cross_sign(signs, n, m) * eval(rc->c, t)[m];
    }

    // Discriminant with the branch taken on the exact pointwise zero of a_n,
    // matching the piecewise definition rather than a tolerance band.
    double discriminant(int n, double t) const {
        const double an = eval(rc->a, t)[n];
        const double dn = eval(rc->d, t)[n];
        const double four = n == 0 ? 4.0 : -4.0;
        if (an == 0.0) return four * dn;
        double sum = 0.0;
        for (int m = 1; m <= 3; ++m) {
            const double v = p(n, m, t);
            sum += v * v;
        }
        return sum + four * an * dn;
    }
};

}  // namespace

AlphaReport alpha_check(const SystemCoeffs& sys, const std::vector<int>& index_set,
                        double t1, double horizon, CrossSigns signs,
                        const Thm42Options& opt) {
    if (index_set.empty()) throw OutOfRange("index set must be nonempty");
    std::array<bool, 4> in_set{};
    for (int n : index_set) {
        if (n < 0 || n > 3) throw OutOfRange("index set entries must be in 0..3");
        if (in_set[n]) throw OutOfRange("index set entries must be distinct");
        in_set[n] = true;
    }

    const CoeffSet rc = to_riccati(sys);
    const CrossTermEval ct{&rc, signs};
    const int g = std::max(opt.grid, 16);
    auto grid_t = [&](int i) { return t1 + (horizon - t1) * i / g; };

    AlphaReport out;
    out.domain_ok = true;
    out.signs_ok = true;
    out.zero_points_ok = true;
    out.discriminants_ok = true;

    for (int n = 0; n < 4; ++n) {
        AlphaComponentReport& cr = out.components[n];
        cr.in_index_set = in_set[n];
        cr.vanishes = component_identically_zero(rc.a, n);
        if (!in_set[n] && !cr.vanishes) out.domain_ok = false;

        auto coeff_n = [&](double t) { return eval(rc.a, t)[n]; };
        auto disc_n = [&](double t) { return ct.discriminant(n, t); };
        auto neg_disc = [&](double t) { return -disc_n(t); };

        // Scan: track the discrete extrema, remember cells worth refining.
        std::vector<double> zero_touches;
        int argmin_a = 0, argmax_d = 0;
        for (int i = 0; i <= g; ++i) {
            const double t = grid_t(i);
            const double d = disc_n(t);
            if (d > cr.max_discriminant) {
                cr.max_discriminant = d;
                cr.max_discriminant_at = t;
                argmax_d = i;
            }
            if (in_set[n]) {
                const double v = coeff_n(t);
                if (v < cr.min_coeff) {
                    cr.min_coeff = v;
                    cr.min_coeff_at = t;
                    argmin_a = i;
                }
                if (std::abs(v) <= opt.tol) zero_touches.push_back(t);
            }
        }

        if (in_set[n] && !cr.vanishes) {
            const double lo = grid_t(std::max(argmin_a - 1, 0));
            const double hi = grid_t(std::min(argmin_a + 1, g));
            double at = cr.min_coeff_at;
            const double refined = golden_min(coeff_n, lo, hi, &at);
            if (refined < cr.min_coeff) {
                cr.min_coeff = refined;
                cr.min_coeff_at = at;
            }
            if (std::abs(refined) <= opt.tol) zero_touches.push_back(at);
            // Interior sign changes the coarse scan stepped over.
            for (int i = 0; i < g; ++i) {
                const double va = coeff_n(grid_t(i)), vb = coeff_n(grid_t(i + 1));
                if (va > opt.tol && vb > opt.tol) continue;
                if (va * vb >= 0.0) continue;
                double a = grid_t(i), b = grid_t(i + 1);
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (a + b);
                    (coeff_n(a) * coeff_n(mid) <= 0.0 ? b : a) = mid;
                }
                zero_touches.push_back(0.5 * (a + b));
            }
        }

        {
            const double lo = grid_t(std::max(argmax_d - 1, 0));
            const double hi = grid_t(std::min(argmax_d + 1, g));
            double at = cr.max_discriminant_at;
            const double refined = -golden_min(neg_disc, lo, hi, &at);
            if (refined > cr.max_discriminant) {
                cr.max_discriminant = refined;
                cr.max_discriminant_at = at;
            }
        }

        for (double t : zero_touches) {
            for (int m = 1; m <= 3; ++m) {
                if (!in_set[m]) continue;
                cr.max_zero_point_gap = std::max(cr.max_zero_point_gap,
                                                 std::abs(ct.p(n, m, t)));
            }
        }

        if (in_set[n] && cr.min_coeff < -opt.tol) out.signs_ok = false;
        if (cr.max_zero_point_gap > opt.tol) out.zero_points_ok = false;
        if (cr.max_discriminant > opt.tol) out.discriminants_ok = false;
    }

    out.holds = out.domain_ok && out.signs_ok && out.zero_points_ok &&
                out.discriminants_ok;
    return out;
}

BetaReport beta_check(const SystemCoeffs& sys, double t1, double horizon,
                      const Thm42Options& opt) {
    OdeProblem p;
    p.dimension = 1;
    p.t0 = t1;
    p.y0 = Eigen::VectorXd::Ones(1);
    p.escape_norm = 1e300;
    p.rhs = [&sys](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy(0) = (eval(sys.a22, t).re() - eval(sys.a11, t).re()) * y(0);
    };
    std::vector<Accumulator> acc;
    acc.push_back({"beta", 1, [&sys](double t, const Eigen::VectorXd& y, double* out) {
                       out[0] = eval(sys.a12, t).norm() * y(0);
                   }});
    const Trajectory traj = solve(p, horizon, opt.rtol, opt.atol, acc);

    const int k = std::max(opt.windows, 4);
    std::vector<double> partial(k + 1, 0.0);
    for (int i = 0; i <= k; ++i)
        partial[i] = traj.query_accumulator("beta", t1 + (horizon - t1) * i / k)(0);
    std::vector<double> increments(k);
    for (int i = 0; i < k; ++i) increments[i] = std::max(partial[i + 1] - partial[i], 0.0);

    BetaReport out;
    out.windows = diagnose_window_values(partial, std::move(increments), opt.tail_tol);
    out.value = partial.back();
    out.converges = out.windows.verdict == WindowVerdict::Converged;
    return out;
}

Thm42Report thm42_check(const SystemCoeffs& sys, const std::vector<int>& index_set,
                        double t1, double horizon, const Thm42Options& opt) {
    Thm42Report out;
    out.index_set = index_set;
    out.alpha_printed = alpha_check(sys, index_set, t1, horizon, CrossSigns::AsPrinted, opt);
    out.alpha_symmetrized =
        alpha_check(sys, index_set, t1, horizon, CrossSigns::Symmetrized, opt);
    out.beta = beta_check(sys, t1, horizon, opt);
    out.verdict = out.alpha_printed.holds && out.beta.converges
                      ? Thm42Verdict::NormalOrExtremal
                      : Thm42Verdict::HypothesesFail;
    out.verdict_symmetrized = out.alpha_symmetrized.holds && out.beta.converges
                                  ? Thm42Verdict::NormalOrExtremal
                                  : Thm42Verdict::HypothesesFail;
    return out;
}

SignPatternReport sign_pattern_check(const SystemCoeffs& sys,
                                     const std::vector<int>& index_set, double t1,
                                     double horizon, double rtol, double atol, int grid,
                                     double tol) {
    if (index_set.empty()) throw OutOfRange("index set must be nonempty");
    const CoeffSet rc = to_riccati(sys);
    const RiccatiSolution sol = solve_riccati(rc, Quat::zero(), t1, horizon, rtol, atol);

    SignPatternReport out;
    out.status = sol.status();
    const double end = sol.t_end();
    const int g = std::max(grid, 16);
    for (int i = 0; i <= g; ++i) {
        const double t = t1 + (end - t1) * i / g;
        const Quat q = sol.q(t);
        for (int n : index_set) {
            const double v = n == 0 ? q.w : -q[n];
            if (v < out.worst) {
                out.worst = v;
                out.worst_component = n;
                out.worst_at = t;
            }
        }
    }
    out.holds = out.status == SolveStatus::ReachedEnd && out.worst >= -tol;
    return out;
}

// ---------------------------------------------------------------------------

Statement2Report statement2_integral(const SystemCoeffs& sys, const SystemSolution& ssol,
                                     double T, double horizon, int windows,
                                     double tail_tol) {
    const int k = std::max(windows, 4);
    Statement2Report out;
    out.partials.assign(k + 1, 0.0);
    std::vector<double> increments(k, 0.0);

    double exponent_base = 0.0;  // int_T^{w} Re[a11 + a22] at the window start
    for (int w = 0; w < k; ++w) {
        const double lo = T + (horizon - T) * w / k;
        const double hi = T + (horizon - T) * (w + 1) / k;
        auto weight_exp = [&](double s) {
            return exponent_base + integrate(sys.a11, lo, s).w + integrate(sys.a22, lo, s).w;
        };
        auto f = [&](double s) {
            const double phi2 = ssol.phi(s).squared_norm();
            return eval(sys.a12, s).norm() / phi2 * std::exp(weight_exp(s));
        };
        const double piece = std::max(scaled_quad(f, lo, hi), 0.0);
        increments[w] = piece;
        out.partials[w + 1] = out.partials[w] + piece;
        exponent_base = weight_exp(hi);
    }

    out.windows = diagnose_window_values(out.partials, std::move(increments), tail_tol);
    out.value = out.partials.back();
    return out;
}

const char* to_string(RatioTrend v) {
    switch (v) {
        case RatioTrend::DecreasingToZero: return "decreasing-to-zero";
        case RatioTrend::Growing: return "growing";
        default: return "bounded-both-ways";
    }
}

double RatioSeries::max_rel_drift_from(double t_from) const {
    const double ref = std::max(std::abs(ratio.back()), 1e-300);
    double worst = 0.0;
    for (size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_from) worst = std::max(worst, std::abs(ratio[i] - ratio.back()) / ref);
    return worst;
}

RatioSeries phi_ratio(const std::function<double(double)>& abs_phi_a,
                      const std::function<double(double)>& abs_phi_b,
                      const std::vector<double>& grid) {
    RatioSeries out;
    out.t = grid;
    out.ratio.reserve(grid.size());
    for (double s : grid)
        out.ratio.push_back(abs_phi_a(s) / std::max(abs_phi_b(s), 1e-300));
    out.monotone_nonincreasing = true;
    for (size_t i = 1; i < out.ratio.size(); ++i)
        if (out.ratio[i] > out.ratio[i - 1] * (1.0 + 1e-12) + 1e-300)
            out.monotone_nonincreasing = false;
    if (!out.ratio.empty()) {
        const double head = std::max(out.ratio.front(), 1e-300);
        if (out.ratio.back() <= 1e-3 * head)
            out.trend = RatioTrend::DecreasingToZero;
        else if (out.ratio.back() >= 1e3 * head)
            out.trend = RatioTrend::Growing;
        else
            out.trend = RatioTrend::BoundedBothWays;
    }
    return out;
}

}  // namespace qr
