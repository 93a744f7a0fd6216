// Acceptance gate: ten fixed criteria, one [PASS]/[FAIL] line each, with the
// measured deviations printed next to the pinned tolerances. Exit 0 iff all
// criteria hold.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qr/coeffs.hpp"
#include "qr/quaternion.hpp"
#include "qr/riccati.hpp"
#include "qr/scenario.hpp"

using qr::CoeffFn;
using qr::CoeffSet;
using qr::Quat;

namespace {

int g_failures = 0;

void report(int number, bool passed, const std::string& label, const std::string& measured) {
    std::printf("[%s] criterion %2d: %s  --  %s\n", passed ? "PASS" : "FAIL", number,
                label.c_str(), measured.c_str());
    if (!passed) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Quat random_quat(std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    return {dist(rng), dist(rng), dist(rng), dist(rng)};
}

// --- criterion 1: determinant and trace of the 4x4 representation ----------

void criterion_symbol_invariants() {
    const double tol = 1e-9;
    std::mt19937 rng(12345);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 10000; ++i) {
        const Quat q = random_quat(rng);
        const auto [det, trace] = qr::symbol_invariants(q);
        const double n4 = q.squared_norm() * q.squared_norm();
        worst = std::max(worst, std::abs(det - n4) / std::max(n4, 1e-12));
        worst = std::max(worst, std::abs(trace - 4.0 * q.re()) / std::max(1.0, 4.0 * std::abs(q.re())));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, worst <= tol && secs < 1.0, "matrix representation invariants on 1e4 samples",
           "max relative deviation " + fmt(worst) + " (tol 1e-9), " + fmt(secs) + "s (< 1s)");
}

// --- criterion 2: multiplicativity of the representation -------------------

void criterion_symbol_homomorphism() {
    const double tol = 1e-10;
    std::mt19937 rng(67890);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Quat p = random_quat(rng);
        const Quat q = random_quat(rng);
        const Eigen::Matrix4d gap = qr::symbol(p * q) - qr::symbol(p) * qr::symbol(q);
        worst = std::max(worst, gap.lpNorm<Eigen::Infinity>());
    }
    report(2, worst <= tol, "representation is multiplicative on 1e4 pairs",
           "max entry deviation " + fmt(worst) + " (tol 1e-10)");
}

// --- criterion 3: closed-form family across coefficients and seeds ---------

void criterion_closed_form() {
    const double tol = 1e-6;
    const double escape_tol = 1e-2;

    std::vector<std::pair<std::string, CoeffFn>> coeffs;
    coeffs.emplace_back("const", CoeffFn::constant(Quat::one()));
    coeffs.emplace_back("exp-decay",
                        CoeffFn::componentwise({qr::ScalarPolyExp{{1.0}, -1.0},
                                                qr::ScalarZero{}, qr::ScalarZero{},
                                                qr::ScalarZero{}}));
    coeffs.emplace_back("bump", CoeffFn::componentwise({qr::ScalarBump{0.5, 0.0, 2.0},
                                                        qr::ScalarZero{}, qr::ScalarZero{},
                                                        qr::ScalarZero{}}));
    const std::vector<Quat> lambdas = {Quat::one(), -Quat::one(), Quat::i(), Quat::j(),
                                       {0.5, 0.0, 0.0, 0.5}};

    double worst = 0.0;
    bool escape_ok = false;
    double escape_seen = 0.0;
    for (const auto& [label, a] : coeffs) {
        CoeffSet cs;
        cs.a = a;
        for (const Quat& lambda : lambdas) {
            const qr::RiccatiSolution run =
                qr::solve_riccati(cs, lambda, 0.0, 10.0, 1e-10, 1e-13);
            double end = run.t_end();
            if (run.status() != qr::SolveStatus::ReachedEnd) end = 0.999 * end;
            Quat accum = Quat::zero();
            double prev = 0.0;
            const int g = 400;
            for (int i = 0; i <= g; ++i) {
                const double t = i == g ? end : end * i / g;
                accum = accum + qr::integrate(cs.a, prev, t);
                prev = t;
                const Quat den = Quat::one() + lambda * accum;
                if (den.norm() < 0.1) continue;  // outside the regular span
                worst = std::max(worst, (run.q(t) - qr::inverse(den) * lambda).norm());
            }
            if (label == "const" && lambda == -Quat::one()) {
                if (run.status() == qr::SolveStatus::Escaped && run.escape_time()) {
                    escape_seen = *run.escape_time();
                    escape_ok = std::abs(escape_seen - 1.0) <= escape_tol;
                }
            }
        }
    }
    report(3, worst <= tol && escape_ok,
           "closed-form family matches integration for 3 coefficients x 5 seeds",
           "sup deviation " + fmt(worst) + " (tol 1e-6), escape time " + fmt(escape_seen) +
               " (1 +- 1e-2)");
}

// --- criteria 4..10 read the builtin catalog reports -----------------------

struct CatalogRun {
    std::map<std::string, qr::RunReport> reports;
    double seconds = 0.0;
};

CatalogRun run_catalog(const std::string& out_dir) {
    CatalogRun out;
    const auto t0 = std::chrono::steady_clock::now();
    for (const std::string& name : qr::builtin_names()) {
        qr::RunOptions opt;
        opt.out_dir = out_dir;
        out.reports[name] = qr::run_scenario(qr::builtin_scenario(name), opt);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

const qr::CheckResult* find_check(const qr::RunReport& rep, const std::string& id) {
    for (const qr::CheckResult& r : rep.checks)
        if (r.id == id) return &r;
    return nullptr;
}

void criterion_identity_suite(const CatalogRun& cat) {
    bool all = true;
    double worst_mod = 0.0, worst_prod = 0.0, worst_cross = 0.0;
    int counted = 0;
    for (const auto& [name, rep] : cat.reports) {
        for (const qr::CheckResult& r : rep.checks) {
            if (r.id == "identity-2.7" || r.id == "identity-2.8") {
                all = all && r.passed && r.deviation <= 1e-7;
                worst_mod = std::max(worst_mod, r.deviation);
                ++counted;
            } else if (r.id == "identity-2.10") {
                all = all && r.passed && r.deviation <= 1e-6;
                worst_prod = std::max(worst_prod, r.deviation);
                ++counted;
            } else if (r.id == "identity-2.2") {
                all = all && r.passed && r.deviation <= 1e-6;
                worst_cross = std::max(worst_cross, r.deviation);
                ++counted;
            }
        }
    }
    all = all && counted > 0 && cat.seconds < 30.0;
    report(4, all, "identity suite across the builtin catalog",
           "modulus " + fmt(worst_mod) + " (tol 1e-7), product " + fmt(worst_prod) +
               " (tol 1e-6), matrix route " + fmt(worst_cross) + " (tol 1e-6), catalog " +
               fmt(cat.seconds) + "s (< 30s)");
}

void criterion_limit_solution(const CatalogRun& cat) {
    const qr::RunReport& rep = cat.reports.at("example-3.1-exp");
    const qr::CheckResult* nu = find_check(rep, "nu-extremal");
    const qr::CheckResult* cls = find_check(rep, "classification");
    bool ok = nu && cls && nu->passed && cls->passed;
    double nu_gap = -1.0, limit_gap = -1.0, track = -1.0;
    if (ok) {
        nu_gap = nu->details.at("nu_t1_gap").get<double>();
        limit_gap = nu->details.at("limit_t1_gap").get<double>();
        track = nu->details.at("track_max_relative").get<double>();
        ok = ok && nu_gap <= 1e-6 && limit_gap <= 1e-6 && track <= 1e-5;
        const auto& seeds = cls->details.at("seeds");
        ok = ok && seeds[0].at("verdict") == "normal-evidence" &&
             seeds[1].at("verdict") == "normal-evidence" && seeds[3].at("verdict") == "escaped";
    }
    report(5, ok, "tail integral, limit solution, and classification (integrable decay)",
           "tail(t1) gap " + fmt(nu_gap) + " (tol 1e-6), limit(t1) gap " + fmt(limit_gap) +
               " (tol 1e-6), tracking " + fmt(track) + " (rel tol 1e-5)");
}

void criterion_oscillatory(const CatalogRun& cat) {
    const qr::RunReport& rep = cat.reports.at("example-3.4");
    const qr::CheckResult* nu = find_check(rep, "nu-extremal");
    const qr::CheckResult* cls = find_check(rep, "classification");
    bool ok = nu && cls && nu->passed && cls->passed;
    std::string windows = "?", verdict = "?";
    if (ok) {
        windows = nu->details.at("mu_windows").get<std::string>();
        ok = ok && (windows == "oscillatory" || windows == "unknown");
        const auto& seeds = cls->details.at("seeds");
        ok = ok && seeds[1].at("verdict") == "normal-evidence" &&
             seeds[2].at("verdict") == "normal-evidence";
        verdict = cls->summary;
        ok = ok && verdict != "extremal";
    }
    report(6, ok, "oscillatory coefficient: no settled tail, no extremal verdict",
           "tail windows '" + windows + "', equation verdict '" + verdict + "'");
}

void criterion_exact_solution(const CatalogRun& cat) {
    const qr::RunReport& rep = cat.reports.at("example-3.3-lambda");
    const qr::CheckResult* r = find_check(rep, "exact-solution-residual");
    bool ok = r && r->passed;
    double residual = -1.0, companions = -1.0;
    if (ok) {
        residual = r->details.at("max_residual").get<double>();
        companions = r->details.at("companion_gap").get<double>();
        ok = ok && residual < 1e-8 && companions <= 1e-8;
    }
    report(7, ok, "known decaying solution with trivial companion functions",
           "residual " + fmt(residual) + " (tol 1e-8), companion gap " + fmt(companions) +
               " (tol 1e-8)");
}

void criterion_bridge(const CatalogRun& cat) {
    const qr::RunReport& rep = cat.reports.at("remark-4.3");
    const qr::CheckResult* lift = find_check(rep, "lift-project");
    const qr::CheckResult* mod = find_check(rep, "modulus-4.4");
    const qr::CheckResult* cov = find_check(rep, "covariance");
    bool ok = lift && mod && cov && lift->passed && mod->passed && cov->passed;
    double round = -1.0, modulus = -1.0, counter = -1.0;
    if (ok) {
        round = lift->details.at("round_trip_gap").get<double>();
        modulus = mod->deviation;
        counter = cov->details.at("left_multiple_residual").get<double>();
        ok = ok && round < 1e-8 && modulus <= 1e-6 && counter > 1e-1;
    }
    report(8, ok, "pair-system bridge: projection, lift, modulus identity, covariance",
           "round trip " + fmt(round) + " (tol 1e-8), modulus " + fmt(modulus) +
               " (tol 1e-6), left-multiplier residual " + fmt(counter) + " (> 0.1)");
}

void criterion_principal_pair(const CatalogRun& cat) {
    const qr::RunReport& rep = cat.reports.at("thm-4.2-real-extremal");
    const qr::CheckResult* thm = find_check(rep, "thm42");
    const qr::CheckResult* s2 = find_check(rep, "statement2");
    const qr::CheckResult* ratios = find_check(rep, "ratios");
    bool ok = thm && s2 && ratios && thm->passed && s2->passed && ratios->passed;
    double d0 = 1.0, final_over_initial = 1.0, drift = 1.0;
    if (ok) {
        ok = ok && thm->details.at("verdict") == "normal-or-extremal";
        d0 = thm->details.at("alpha").at("components")[0].at("max_discriminant").get<double>();
        ok = ok && d0 == 0.0;
        ok = ok && s2->details.at("principal_verdict") == "diverges-to-infinity" &&
             s2->details.at("non_principal_verdict") == "converged";
        final_over_initial = ratios->details.at("principal_final_over_initial").get<double>();
        drift = ratios->details.at("pair_drift").get<double>();
        ok = ok && ratios->details.at("principal_monotone").get<bool>() &&
             final_over_initial < 1e-3 && drift < 1e-3;
    }
    report(9, ok, "structural conditions and principal pair (real decaying coupling)",
           "discriminant " + fmt(d0) + " (= 0), ratio decay " + fmt(final_over_initial) +
               " (< 1e-3), non-principal drift " + fmt(drift) + " (< 1e-3)");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void criterion_determinism(const CatalogRun& a, const CatalogRun& b, const std::string& dir_a,
                           const std::string& dir_b) {
    bool ok = true;
    int files = 0;
    for (const auto& [name, rep] : a.reports) {
        const auto it = b.reports.find(name);
        if (it == b.reports.end() || rep.csv_files != it->second.csv_files) {
            ok = false;
            continue;
        }
        for (const std::string& rel : rep.csv_files) {
            ++files;
            const std::string fa = slurp(std::filesystem::path(dir_a) / rel);
            const std::string fb = slurp(std::filesystem::path(dir_b) / rel);
            ok = ok && !fa.empty() && fa == fb;
        }
    }
    report(10, ok && files > 0, "repeated runs emit byte-identical series",
           std::to_string(files) + " files compared across two catalog runs");
}

}  // namespace

int main() {
    criterion_symbol_invariants();
    criterion_symbol_homomorphism();
    criterion_closed_form();

    const std::string dir_a = "acceptance-out-a";
    const std::string dir_b = "acceptance-out-b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    const CatalogRun cat_a = run_catalog(dir_a);
    const CatalogRun cat_b = run_catalog(dir_b);

    criterion_identity_suite(cat_a);
    criterion_limit_solution(cat_a);
    criterion_oscillatory(cat_a);
    criterion_exact_solution(cat_a);
    criterion_bridge(cat_a);
    criterion_principal_pair(cat_a);
    criterion_determinism(cat_a, cat_b, dir_a, dir_b);

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    if (g_failures == 0) {
        std::printf("acceptance: all 10 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
