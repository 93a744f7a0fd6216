#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qr/derivative.hpp"
#include "qr/quadrature.hpp"
#include "qr/riccati.hpp"

using qr::CoeffFn;
using qr::CoeffSet;
using qr::Quat;
using qr::RiccatiSolution;

namespace {

CoeffSet decay_coeffs() {
    // a = e^-t, b = c = d = 0.
    CoeffSet cs;
    cs.a = CoeffFn::componentwise({qr::ScalarPolyExp{{1.0}, -1.0}, qr::ScalarZero{},
                                   qr::ScalarZero{}, qr::ScalarZero{}});
    cs.b = CoeffFn::zero();
    cs.c = CoeffFn::zero();
    cs.d = CoeffFn::zero();
    return cs;
}

CoeffSet generic_coeffs() {
    CoeffSet cs;
    cs.a = CoeffFn::componentwise({qr::ScalarConst{1.0}, qr::ScalarPolyExp{{0.5}, -1.0},
                                   qr::ScalarZero{}, qr::ScalarBump{0.3, 1.0, 4.0}});
    cs.b = CoeffFn::constant({0.0, 0.0, 0.2, 0.0});
    cs.c = CoeffFn::constant({-0.1, 0.0, 0.0, 0.0});
    cs.d = CoeffFn::constant({0.0, 0.05, 0.0, -0.05});
    return cs;
}

}  // namespace

TEST_CASE("right-hand side multiplies in the documented order") {
    CoeffSet cs;
    cs.a = CoeffFn::constant(Quat::one());
    cs.b = CoeffFn::constant(Quat::i());
    cs.c = CoeffFn::constant(Quat::j());
    cs.d = CoeffFn::constant(Quat::k());
    // q = 1+i: q^2 = 2i, i q = -1+i, q j = j+k; rhs = -(2i + (-1+i) + (j+k) + k).
    const Quat r = qr::riccati_rhs(cs, 0.0, Quat::one() + Quat::i());
    CHECK((r - Quat{1.0, -3.0, -1.0, -2.0}).norm() < 1e-15);
}

TEST_CASE("constant nonreal coefficient reproduces the closed form") {
    // a = i, seed j at 0: the solution is (1 - k t)^-1 j, so at t = 1 it is
    // (j - i)/2. The two routes share nothing past the coefficient values.
    CoeffSet cs;
    cs.a = CoeffFn::constant(Quat::i());
    const RiccatiSolution sol = qr::solve_riccati(cs, Quat::j(), 0.0, 1.0, 1e-11, 1e-13);
    REQUIRE(sol.status() == qr::SolveStatus::ReachedEnd);
    const Quat expected = {0.0, -0.5, 0.5, 0.0};
    CHECK((sol.q(1.0) - expected).norm() < 1e-9);
    for (double t : {0.25, 0.5, 0.8}) {
        const Quat denom = Quat::one() - Quat::k() * t;
        CHECK((sol.q(t) - qr::inverse(denom) * Quat::j()).norm() < 1e-9);
    }
}

TEST_CASE("companion moduli match their accumulated integrals") {
    const CoeffSet cs = generic_coeffs();
    const RiccatiSolution sol =
        qr::solve_riccati(cs, {0.0, 0.1, 0.0, 0.0}, 0.0, 6.0, 1e-11, 1e-13);
    REQUIRE(sol.status() == qr::SolveStatus::ReachedEnd);
    CHECK(sol.phi(0.0) == Quat::one());
    CHECK(sol.psi(0.0) == Quat::one());
    for (double t : {0.5, 2.0, 4.5, 6.0}) {
        CHECK(qr::phi_modulus_identity_error(sol, t) < 1e-9);
        CHECK(qr::psi_modulus_identity_error(sol, t) < 1e-9);
    }
}

TEST_CASE("trajectory satisfies the equation pointwise") {
    const CoeffSet cs = generic_coeffs();
    const RiccatiSolution sol =
        qr::solve_riccati(cs, {0.0, 0.1, 0.0, 0.0}, 0.0, 6.0, 1e-11, 1e-13);
    auto qf = [&sol](double t) { return sol.q(t); };
    for (double t : {0.3, 1.9, 3.3, 5.7}) {
        const Quat residual = qr::fd_derivative(qf, t, 1e-3, 0.0, 6.0) -
                              qr::riccati_rhs(cs, t, sol.q(t));
        CHECK(residual.norm() < 1e-7);
    }
}

TEST_CASE("running integral mu agrees with direct quadrature of the integrand") {
    const CoeffSet cs = generic_coeffs();
    const RiccatiSolution sol =
        qr::solve_riccati(cs, {0.0, 0.1, 0.0, 0.0}, 0.0, 6.0, 1e-11, 1e-13);
    for (int n = 0; n < 4; ++n) {
        const auto r = qr::integrate_adaptive(
            [&](double t) {
                return (qr::inverse(sol.phi(t)) * qr::eval(cs.a, t) *
                        qr::inverse(sol.psi(t)))[n];
            },
            2.0, 4.0, 1e-11);
        REQUIRE(r.converged);
        CHECK(std::abs((sol.mu(4.0) - sol.mu(2.0))[n] - r.value) < 1e-8);
    }
}

TEST_CASE("family members are solutions and match direct integration") {
    const CoeffSet cs = generic_coeffs();
    const Quat seed = {0.0, 0.1, 0.0, 0.0};
    const RiccatiSolution base = qr::solve_riccati(cs, seed, 0.0, 6.0, 1e-11, 1e-13);
    const Quat lambda = {0.3, 0.0, 0.0, -0.2};

    CHECK((qr::family_member(base, lambda, 0.0) - (seed + lambda)).norm() < 1e-12);
    CHECK((qr::family_member(base, Quat::zero(), 3.0) - base.q(3.0)).norm() < 1e-12);

    const RiccatiSolution direct =
        qr::solve_riccati(cs, seed + lambda, 0.0, 6.0, 1e-11, 1e-13);
    REQUIRE(direct.status() == qr::SolveStatus::ReachedEnd);
    for (double t : {0.5, 2.0, 4.0, 6.0}) {
        CHECK((qr::family_member(base, lambda, t) - direct.q(t)).norm() < 1e-8);
    }

    auto fam = [&](double t) { return qr::family_member(base, lambda, t); };
    for (double t : {1.1, 3.7}) {
        const Quat residual =
            qr::fd_derivative(fam, t, 1e-3, 0.0, 6.0) - qr::riccati_rhs(cs, t, fam(t));
        CHECK(residual.norm() < 1e-6);
    }
}

TEST_CASE("pair modulus identities hold across distinct solutions") {
    const CoeffSet cs = generic_coeffs();
    const Quat seed = {0.0, 0.1, 0.0, 0.0};
    const Quat lambda = {0.3, 0.0, 0.0, -0.2};
    const RiccatiSolution s = qr::solve_riccati(cs, seed, 0.0, 6.0, 1e-11, 1e-13);
    const RiccatiSolution m =
        qr::solve_riccati(cs, seed + lambda, 0.0, 6.0, 1e-11, 1e-13);
    for (double t : {1.0, 3.0, 6.0}) {
        CHECK(qr::pair_modulus_identity_error(m, s, t) < 1e-8);
        CHECK(qr::pair_modulus_identity_error(s, m, t) < 1e-8);
        CHECK(qr::pair_product_identity_error(m, s, t) < 1e-8);
    }
}

TEST_CASE("companions along a prescribed path match the full solve") {
    const CoeffSet cs = generic_coeffs();
    const RiccatiSolution full =
        qr::solve_riccati(cs, {0.0, 0.1, 0.0, 0.0}, 0.0, 6.0, 1e-11, 1e-13);
    const RiccatiSolution along = qr::solve_riccati_along_path(
        cs, [&full](double t) { return full.q(t); }, 0.0, 6.0, 1e-11, 1e-13);
    for (double t : {1.0, 3.5, 6.0}) {
        CHECK((along.phi(t) - full.phi(t)).norm() < 1e-8);
        CHECK((along.psi(t) - full.psi(t)).norm() < 1e-8);
        CHECK((along.mu(t) - full.mu(t)).norm() < 1e-8);
    }
}

TEST_CASE("window diagnosis separates settling, growth and oscillation") {
    using qr::WindowVerdict;
    auto real_path = [](double (*f)(double)) {
        return [f](double t) { return Quat::real(f(t)); };
    };
    CHECK(qr::diagnose_windows(real_path(+[](double t) { return 1.0 - std::exp(-t); }),
                               0.0, 60.0)
              .verdict == WindowVerdict::Converged);
    CHECK(qr::diagnose_windows(real_path(+[](double t) { return t; }), 0.0, 60.0)
              .verdict == WindowVerdict::DivergesToInfinity);
    CHECK(qr::diagnose_windows(real_path(+[](double t) { return std::exp(t); }), 0.0,
                               60.0)
              .verdict == WindowVerdict::DivergesToInfinity);
    CHECK(qr::diagnose_windows(real_path(+[](double t) { return t * std::sin(t); }),
                               0.0, 60.0)
              .verdict == WindowVerdict::Oscillatory);
    CHECK(qr::diagnose_windows(real_path(+[](double t) { return std::log(1.0 + t); }),
                               0.0, 60.0)
              .verdict == WindowVerdict::Unknown);
}

TEST_CASE("tail integral of the decaying coefficient") {
    const CoeffSet cs = decay_coeffs();

    SUBCASE("short horizon: clean tail, no vanishing") {
        const RiccatiSolution sol =
            qr::solve_riccati(cs, Quat::zero(), 0.0, 18.0, 1e-11, 1e-13);
        const qr::NuAnalysis nu = qr::analyze_nu(sol);
        CHECK(std::abs(nu.nu_t1.w - (1.0 - std::exp(-18.0))) < 1e-9);
        CHECK(nu.mu_windows.verdict == qr::WindowVerdict::Converged);
        CHECK(nu.zeros.empty());
        // Smallest scanned |nu| sits just above the zero tolerance by design.
        CHECK(nu.min_abs_nu > 1.5e-8);
        CHECK(nu.min_abs_nu < 1e-7);
    }

    SUBCASE("long horizon: the truncated tail crosses the zero tolerance") {
        const RiccatiSolution sol =
            qr::solve_riccati(cs, Quat::zero(), 0.0, 60.0, 1e-12, 1e-14);
        const qr::NuAnalysis nu = qr::analyze_nu(sol);
        CHECK(std::abs(nu.nu_t1.w - 1.0) < 1e-9);
        REQUIRE_FALSE(nu.zeros.empty());
        // exp(-s) falls below 1e-8 near s = 18.4.
        CHECK(nu.zeros.front() == doctest::Approx(18.42).epsilon(0.05));
    }
}

TEST_CASE("limit solution built from the base run tracks -e^t") {
    const CoeffSet cs = decay_coeffs();
    const RiccatiSolution base =
        qr::solve_riccati(cs, Quat::zero(), 0.0, 60.0, 1e-12, 1e-14);
    REQUIRE(base.status() == qr::SolveStatus::ReachedEnd);
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = 10.0 * i / 100;
        const Quat q = qr::limit_solution_from_base(base, t);
        worst = std::max(worst, (q - Quat::real(-std::exp(t))).norm() / std::exp(t));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("limit solution refuses a vanishing tail") {
    CoeffSet cs;
    cs.a = CoeffFn::componentwise({qr::ScalarBump{0.5, 0.0, 2.0}, qr::ScalarZero{},
                                   qr::ScalarZero{}, qr::ScalarZero{}});
    const RiccatiSolution base =
        qr::solve_riccati(cs, Quat::zero(), 0.0, 16.0, 1e-11, 1e-13);
    const qr::NuAnalysis nu = qr::analyze_nu(base);
    CHECK(std::abs(nu.nu_t1.w - 0.5 * 1.2069003224378763) < 1e-9);
    REQUIRE_FALSE(nu.zeros.empty());
    CHECK(nu.zeros.front() > 1.9);
    CHECK(nu.zeros.front() < 2.05);
    CHECK_THROWS_AS((void)qr::limit_solution_from_base(base, 3.0), qr::NuVanishes);
    // Before the support ends the tail is still alive.
    const Quat q1 = qr::limit_solution_from_base(base, 0.5);
    CHECK(q1.norm() > 0.0);
}

TEST_CASE("classification of the decaying coefficient across seeds") {
    using qr::SeedVerdict;
    const CoeffSet cs = decay_coeffs();
    const std::vector<Quat> seeds = {Quat::zero(), Quat::one(), Quat::real(-1.0),
                                     Quat::real(-2.0)};
    const qr::ClassificationReport rep = qr::classify(cs, seeds, 0.0, 18.0, 1e-10, 1e-13);
    REQUIRE(rep.seeds.size() == 4);
    CHECK(rep.seeds[0].verdict == SeedVerdict::NormalEvidence);
    CHECK(rep.seeds[1].verdict == SeedVerdict::NormalEvidence);
    CHECK(rep.seeds[2].verdict == SeedVerdict::ExtremalCandidate);
    CHECK(rep.seeds[3].verdict == SeedVerdict::Escaped);
    REQUIRE(rep.seeds[3].escape_time.has_value());
    // 1/(0.5 - e^-t) has its pole at ln 2.
    CHECK(*rep.seeds[3].escape_time == doctest::Approx(std::log(2.0)).epsilon(1e-2));
    CHECK(rep.seeds[2].mu_final > 1e6);
    CHECK(rep.seeds[2].mu_monotone);
    CHECK(rep.verdict == qr::EquationVerdict::Extremal);
}

TEST_CASE("classification of the compact-support coefficient is normal") {
    CoeffSet cs;
    cs.a = CoeffFn::componentwise({qr::ScalarBump{0.5, 0.0, 2.0}, qr::ScalarZero{},
                                   qr::ScalarZero{}, qr::ScalarZero{}});
    const std::vector<Quat> seeds = {Quat::zero(), Quat::one(), Quat::real(-1.0)};
    const qr::ClassificationReport rep = qr::classify(cs, seeds, 0.0, 16.0, 1e-10, 1e-13);
    for (const auto& sr : rep.seeds) CHECK(sr.verdict == qr::SeedVerdict::NormalEvidence);
    CHECK(rep.verdict == qr::EquationVerdict::Normal);
}

TEST_CASE("matrix route stays consistent with the quaternion route") {
    const CoeffSet cs = generic_coeffs();
    const Quat seed = {0.0, 0.1, 0.0, 0.0};
    const RiccatiSolution sol = qr::solve_riccati(cs, seed, 0.0, 6.0, 1e-11, 1e-13);
    const qr::MatrixRiccatiRun mat = qr::solve_matrix_riccati(cs, seed, 0.0, 6.0, 1e-11, 1e-13);
    REQUIRE(mat.status() == qr::SolveStatus::ReachedEnd);
    for (double t : {1.5, 3.0, 6.0}) {
        CHECK(qr::symbol_consistency_error(mat, sol, t) < 1e-7);
        CHECK(qr::det_phi_trace_error(mat, t) < 1e-8);
        CHECK(qr::det_psi_trace_error(mat, t) < 1e-8);
        CHECK(qr::det_phi_modulus4_error(mat, sol, t) < 1e-7);
    }
}

TEST_CASE("escape of the blowing-up seed is refined near the pole") {
    CoeffSet cs;
    cs.a = CoeffFn::constant(Quat::one());
    const RiccatiSolution sol =
        qr::solve_riccati(cs, Quat::real(-1.0), 0.0, 2.0, 1e-10, 1e-13);
    REQUIRE(sol.status() == qr::SolveStatus::Escaped);
    CHECK(*sol.escape_time() == doctest::Approx(1.0).epsilon(1e-2));
}
