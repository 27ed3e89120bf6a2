#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "mvjump/closed_forms.hpp"
#include "mvjump/fokker_planck.hpp"

using namespace mvjump;

namespace {

constexpr double kStdNormalAt0 = 0.3989422804014327;

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return kStdNormalAt0 / sd * std::exp(-0.5 * z * z);
}

CoefficientModel diffusion_only(double beta) {
    return CoefficientModel([](double, double, const LawView&, double) { return 0.0; },
                            [beta](double, double, const LawView&, double) { return beta; },
                            [](double, const LawView&, double, double) { return 0.0; });
}

CoefficientModel drift_only(double alpha) {
    return CoefficientModel([alpha](double, double, const LawView&, double) { return alpha; },
                            [](double, double, const LawView&, double) { return 0.0; },
                            [](double, const LawView&, double, double) { return 0.0; });
}

double trapz_against(const std::vector<double>& f, const GridDensity& m,
                     const TestPolynomial& q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double term = f[i] * q(m.x(i));
        if (i == 0 || i + 1 == f.size()) term *= 0.5;
        acc += term;
    }
    return acc * m.dx();
}

}  // namespace

TEST_CASE("apply_adjoint: null coefficients give the zero function") {
    const auto m = GridDensity::normal(GridSpec(-8.0, 8.0, 0.05), 0.0, 1.0);
    for (double v : apply_adjoint(CoefficientModel::zero(), JumpMeasure(), m, 0.0, 0.0))
        CHECK(v == 0.0);
}

TEST_CASE("apply_adjoint: Gaussian heat operator value at the origin") {
    // beta^2 = 1: A* m = m''/2, and m''(0) = -pdf(0) for the standard normal.
    const auto m = GridDensity::normal(GridSpec(-8.0, 8.0, 0.01), 0.0, 1.0);
    const auto out = apply_adjoint(diffusion_only(1.0), JumpMeasure(), m, 0.0, 0.0);
    const std::size_t i0 = 800;  // x = 0
    CHECK(m.x(i0) == doctest::Approx(0.0));
    CHECK(std::abs(out[i0] - (-0.19947114020071635)) <= 1e-4);
}

TEST_CASE("apply_adjoint: duality against the drift pairing") {
    // q(x) = x: <A* m, q> = <m, alpha> for pure drift.
    const auto m = GridDensity::normal(GridSpec(-8.0, 8.0, 0.02), 0.3, 1.0);
    const CoefficientModel linear_drift(
        [](double, double x, const LawView&, double) { return x; },
        [](double, double, const LawView&, double) { return 0.0; },
        [](double, const LawView&, double, double) { return 0.0; });
    const auto out = apply_adjoint(linear_drift, JumpMeasure(), m, 0.0, 0.0);
    CHECK(std::abs(trapz_against(out, m, TestPolynomial::identity()) - 0.3) <= 1e-6);
}

TEST_CASE("apply_adjoint: conservation and generator duality with jumps") {
    const auto m = GridDensity::normal(GridSpec(-8.0, 8.0, 0.02), 1.0, 0.8);
    const JumpMeasure nu({{0.3, 2.0}});
    const auto model = lq_model(0.5, 1.0);
    const double u = 0.6;
    const auto out = apply_adjoint(model, nu, m, 0.0, u);
    CHECK(std::abs(trapz_against(out, m, TestPolynomial::constant(1.0))) <= 1e-8);

    const LawView law(m);
    for (const auto& q :
         {TestPolynomial::identity(), TestPolynomial({0.0, 0.0, 1.0}), TestPolynomial({1.0, 2.0, -0.5})}) {
        const double lhs = trapz_against(out, m, q);
        const double rhs = pairing_with_generator(model, nu, m, law, 0.0, q, u);
        CHECK(std::abs(lhs - rhs) <= 5e-4);  // O(dx^2) from the shift interpolation
    }
}

TEST_CASE("apply_adjoint duality error decays at second order in dx") {
    // Shift offset chosen with matching fractional grid position at dx and
    // dx/2 (1/3 vs 2/3 of a cell) so the interpolation constant is the same.
    const JumpMeasure nu({{0.3066666666666667, 2.0}});
    const auto model = lq_model(0.5, 1.0);
    const auto q = TestPolynomial({0.0, 0.0, 1.0});
    const auto error_at = [&](double dx) {
        const auto m = GridDensity::normal(GridSpec(-8.0, 8.0, dx), 1.0, 0.8);
        const LawView law(m);
        const auto out = apply_adjoint(model, nu, m, 0.0, 0.0);
        return std::abs(trapz_against(out, m, q) -
                        pairing_with_generator(model, nu, m, law, 0.0, q, 0.0));
    };
    const double coarse = error_at(0.02);
    const double fine = error_at(0.01);
    CHECK(coarse > 1e-6);  // measurably above roundoff
    CHECK(coarse / fine >= 3.0);
    CHECK(coarse / fine <= 5.5);
}

TEST_CASE("solve_fp: frozen dynamics preserve the density exactly") {
    const auto m0 = GridDensity::normal(GridSpec(-4.0, 4.0, 0.05), 0.0, 0.8);
    const auto sol = solve_fp(CoefficientModel::zero(), JumpMeasure(), m0, ControlPolicy::zero(),
                              0.01, 0.1);
    const auto mT = sol.final_density();
    for (std::size_t i = 0; i < m0.size(); ++i) CHECK(mT.values()[i] == m0.values()[i]);
}

TEST_CASE("solve_fp: heat kernel spreads N(0,0.25) to N(0,1)") {
    const auto m0 = GridDensity::normal(GridSpec(-8.0, 8.0, 0.04), 0.0, 0.5);
    const auto sol = solve_fp(diffusion_only(1.0), JumpMeasure(), m0, ControlPolicy::zero(),
                              7.5e-4, 0.75);
    const auto mT = sol.final_density();
    double l1 = 0.0;
    for (std::size_t i = 0; i < mT.size(); ++i)
        l1 += std::abs(mT.values()[i] - normal_pdf(mT.x(i), 0.0, 1.0)) * mT.dx();
    CHECK(l1 <= 1e-2);
    CHECK(sol.mass_drift_max() <= 1e-3);
}

TEST_CASE("solve_fp: pure transport moves the density without losing shape") {
    const auto m0 = GridDensity::normal(GridSpec(-8.0, 8.0, 0.04), 0.0, 0.5);
    const auto sol = solve_fp(drift_only(1.0), JumpMeasure(), m0, ControlPolicy::zero(), 2e-4, 0.5);
    const auto mT = sol.final_density();
    double l1 = 0.0;
    for (std::size_t i = 0; i < mT.size(); ++i)
        l1 += std::abs(mT.values()[i] - normal_pdf(mT.x(i), 0.5, 0.5)) * mT.dx();
    CHECK(l1 <= 1e-2);
}

TEST_CASE("solve_fp: stability guard rejects oversized dt") {
    const auto m0 = GridDensity::normal(GridSpec(-8.0, 8.0, 0.1), 0.0, 1.0);
    CHECK_THROWS_WITH_AS(solve_fp(diffusion_only(1.0), JumpMeasure(), m0, ControlPolicy::zero(),
                                  0.02, 0.1),
                         doctest::Contains("stability"), std::runtime_error);
}

TEST_CASE("characteristic_rhs: algebraic oracles") {
    std::vector<double> pos;
    RngStream rng(3, 0);
    for (int j = 0; j < 400; ++j) pos.push_back(rng.normal());
    const EmpiricalEnsemble e(pos);

    // y = 0: every bracket term vanishes.
    CHECK(std::abs(characteristic_rhs(e, diffusion_only(1.0), JumpMeasure(), 0.0, 0.0, 0.0)) == 0.0);

    for (double y : {-2.5, 0.7, 4.0}) {
        const auto cf = characteristic_function(e, y);
        // constant drift c0: L(y) = -i y c0 mu^(y)
        const auto drift_rhs = characteristic_rhs(e, drift_only(0.8), JumpMeasure(), 0.0, y, 0.0);
        CHECK(std::abs(drift_rhs - std::complex<double>(0.0, -y * 0.8) * cf) <= 1e-12);
        // constant diffusion: L(y) = -y^2/2 mu^(y)
        const auto diff_rhs = characteristic_rhs(e, diffusion_only(1.0), JumpMeasure(), 0.0, y, 0.0);
        CHECK(std::abs(diff_rhs - (-0.5 * y * y) * cf) <= 1e-12);
    }
}

TEST_CASE("check_characteristic_evolution: frozen dynamics have zero discrepancy") {
    const auto sim = simulate_particles(CoefficientModel::zero(), ControlPolicy::zero(),
                                        JumpMeasure(), 0.7, 64, 0.01, 0.1, 5);
    const auto report = check_characteristic_evolution(sim, CoefficientModel::zero(),
                                                       JumpMeasure(), {-2.0, 0.0, 1.5}, 0.01,
                                                       {0.0, 0.05});
    CHECK(report.max_discrepancy <= 1e-13);
}

TEST_CASE("check_characteristic_evolution: constant drift stays inside the band") {
    const auto init = normal_initial_positions(0.0, 1.0, 20000, 17);
    const auto sim = simulate_particles_from(drift_only(1.0), ControlPolicy::zero(), JumpMeasure(),
                                             init, 0.01, 0.2, 17);
    std::vector<double> ys;
    for (double y = -5.0; y <= 5.0 + 1e-12; y += 0.5) ys.push_back(y);
    const auto report = check_characteristic_evolution(sim, drift_only(1.0), JumpMeasure(), ys,
                                                       0.01, {0.1});
    CHECK(report.worst_excess(0.05) <= 0.0);
}

TEST_CASE("check_characteristic_evolution: pure jump scenario stays inside the band") {
    const JumpMeasure nu({{1.0, 2.0}});
    const CoefficientModel model([](double, double, const LawView&, double) { return 0.0; },
                                 [](double, double, const LawView&, double) { return 0.0; },
                                 [](double, const LawView&, double, double zeta) { return zeta; });
    const auto init = normal_initial_positions(0.0, 1.0, 20000, 29);
    const auto sim = simulate_particles_from(model, ControlPolicy::zero(), nu, init, 0.01, 0.2, 29);
    std::vector<double> ys;
    for (double y = -5.0; y <= 5.0 + 1e-12; y += 0.5) ys.push_back(y);
    const auto report = check_characteristic_evolution(sim, model, nu, ys, 0.01, {0.1});
    CHECK(report.worst_excess(0.05) <= 0.0);
}

TEST_CASE("simulated characteristic function tracks the compound-Poisson solution") {
    // d/dt mu^ = L with gamma(zeta) = zeta on a single atom integrates to
    // mu^_t(y) = mu^_0(y) exp(t lambda (e^{-iy} - 1 + iy)).
    const JumpMeasure nu({{1.0, 2.0}});
    const CoefficientModel model([](double, double, const LawView&, double) { return 0.0; },
                                 [](double, double, const LawView&, double) { return 0.0; },
                                 [](double, const LawView&, double, double zeta) { return zeta; });
    const std::size_t N = 20000;
    const auto init = normal_initial_positions(0.0, 1.0, N, 31);
    const auto sim = simulate_particles_from(model, ControlPolicy::zero(), nu, init, 0.005, 0.5, 31);
    const double t = 0.5, y = 1.0;
    const auto cf0 = characteristic_function(sim.initial(), y);
    const std::complex<double> exponent =
        t * 2.0 * (std::exp(std::complex<double>(0.0, -y)) - 1.0 + std::complex<double>(0.0, y));
    const auto expected = cf0 * std::exp(exponent);
    const auto got = characteristic_function(sim.final(), y);
    CHECK(std::abs(got - expected) <= 3.0 * std::sqrt(2.0 / static_cast<double>(N)) + 0.01);
}
