#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mvjump/closed_forms.hpp"

using namespace mvjump;

namespace {

// sigma = 0 collapses the system to k1' = -2 k1^2 with k2 = k3 = 0, solved by
// k1(s) = -1 / (2 + 2(T - s)).
double k1_analytic(double s, double T) { return -1.0 / (2.0 + 2.0 * (T - s)); }

}  // namespace

TEST_CASE("riccati_solve: sigma = 0 analytic solution") {
    const double T = 1.0;
    const auto curves = riccati_solve(0.0, 0.0, T, 1e-4);
    CHECK(std::abs(curves.k1_at(0.0) + 0.25) <= 1e-6);
    for (std::size_t i = 0; i < curves.s.size(); ++i) {
        CHECK(std::abs(curves.k2[i]) <= 1e-8);
        CHECK(std::abs(curves.k3[i]) <= 1e-8);
    }
    for (double s : {0.1, 0.35, 0.8})
        CHECK(curves.k1_at(s) == doctest::Approx(k1_analytic(s, T)).epsilon(1e-7));
}

TEST_CASE("riccati_solve: exact terminal values") {
    const auto curves = riccati_solve(0.7, 0.1, 2.0, 1e-3);
    CHECK(curves.k1.back() == -0.5);
    CHECK(curves.k2.back() == 0.0);
    CHECK(curves.k3.back() == 0.0);
}

TEST_CASE("riccati_solve: terminal slope of k3 is sigma_eff^2 / 2") {
    const double sigma = 0.5, jump2 = 0.18, T = 1.0, dt = 1e-4;
    const auto curves = riccati_solve(sigma, jump2, T, dt);
    const double sig_eff2 = sigma * sigma + jump2;
    const double slope = (curves.k3.back() - curves.k3[curves.k3.size() - 2]) / dt;
    CHECK(std::abs(slope - 0.5 * sig_eff2) <= 10.0 * dt);
}

TEST_CASE("riccati_solve converges at fourth order") {
    // Error is measured where it sits well above roundoff; halving dt should
    // shrink it by about 16x.
    const double T = 1.0;
    const double err_coarse = std::abs(riccati_solve(0.0, 0.0, T, 0.05).k1_at(0.0) + 0.25);
    const double err_fine = std::abs(riccati_solve(0.0, 0.0, T, 0.025).k1_at(0.0) + 0.25);
    CHECK(err_coarse > 1e3 * 1e-16);
    CHECK(err_coarse / err_fine >= 12.0);
    CHECK(err_coarse / err_fine <= 20.0);
}

TEST_CASE("riccati_solve: blow-up detection") {
    CHECK_THROWS_WITH_AS(riccati_solve(1e4, 0.0, 1.0, 1e-3), doctest::Contains("blow-up"),
                         std::runtime_error);
}

TEST_CASE("lq_feedback: terminal and sigma = 0 structure") {
    const double T = 1.0;
    const auto curves = riccati_solve(0.5, 0.0, T, 1e-3);
    const auto policy = lq_feedback(curves);
    const LawView point({1.0, 0.4, 0.16, 0.064, 0.0256});  // mean 0.4
    // At T: 2k1 + k2 = -1 and k2 + 2k3 = 0, so u = -x.
    CHECK(policy(T, 1.7, point) == doctest::Approx(-1.7).epsilon(1e-9));

    const auto flat = riccati_solve(0.0, 0.0, T, 1e-4);
    const auto policy0 = lq_feedback(flat);
    for (double t : {0.0, 0.45, 0.9}) {
        CHECK(policy0(t, 2.0, point) ==
              doctest::Approx(2.0 * k1_analytic(t, T) * 2.0).epsilon(1e-6));
        // law dependence vanishes when k2 + 2 k3 = 0
        const LawView other({1.0, -3.0, 9.0, -27.0, 81.0});
        CHECK(policy0(t, 2.0, point) == policy0(t, 2.0, other));
    }
    CHECK_THROWS_AS(policy(T + 0.5, 0.0, point), std::domain_error);
}

TEST_CASE("lq_value: terminal payoff and point-mass value") {
    const double T = 1.0;
    const auto phi = lq_value(riccati_solve(0.0, 0.0, T, 1e-4));
    const std::vector<double> z{1.0};  // <delta_1, q> = 1
    CHECK(phi.value(T, 1.3, z) == doctest::Approx(-0.5 * 1.3 * 1.3).epsilon(1e-12));
    CHECK(phi.value(0.0, 1.0, z) == doctest::Approx(-0.25).epsilon(1e-6));
}

TEST_CASE("consumption solution: closed-form pieces") {
    const auto sol = consumption_solution(1.0, 1.0, [](double) { return 0.0; }, 1e-4);
    CHECK(sol.kappa1(0.0) == 2.0);
    CHECK(sol.kappa1(1.0) == 1.0);
    CHECK(sol.c_hat(0.0) == 0.5);
    CHECK(sol.c_hat(1.0) == 1.0);
    CHECK(sol.kappa0(1.0) == 0.0);
    // kappa0(0) = -2 ln 2 (analytic antiderivative oracle)
    CHECK(std::abs(sol.kappa0(0.0) + 1.3862943611198906) <= 1e-8);
    // c_hat increases as kappa1 decreases
    double prev = 0.0;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CHECK(sol.c_hat(s) > prev);
        prev = sol.c_hat(s);
    }
}

TEST_CASE("consumption: theta -> infinity kills consumption") {
    const auto sol = consumption_solution(1e9, 1.0, [](double) { return 0.0; }, 1e-3);
    CHECK(sol.c_hat(0.0) <= 1e-8);
}

TEST_CASE("consumption value equals the quadrature objective") {
    const auto sol = consumption_solution(1.0, 1.0, [](double) { return 0.0; }, 1e-4);
    const auto eval = consumption_value_and_objective(sol, 1.0, 1e-4);
    CHECK(eval.value == doctest::Approx(-1.3862943611198906).epsilon(1e-8));
    CHECK(std::abs(eval.objective - eval.value) <= 1e-6);

    // strict suboptimality of scaled consumption
    for (double factor : {0.8, 1.2}) {
        const double j = consumption_objective(
            sol, [&sol, factor](double t) { return factor * sol.c_hat(t); }, 1.0, 1e-4);
        CHECK(j < eval.objective);
    }
    CHECK_THROWS_AS(consumption_value_and_objective(sol, -1.0, 1e-4), std::domain_error);
}

TEST_CASE("consumption value/objective identity with discounting") {
    const auto sol = consumption_solution(0.7, 1.5, [](double) { return 0.15; }, 1e-4);
    const auto eval = consumption_value_and_objective(sol, 2.0, 1e-4);
    CHECK(std::abs(eval.objective - eval.value) <= 1e-6);
}

TEST_CASE("consumption candidate satisfies the HJB equation") {
    // The log-ansatz solves the consumption HJB regardless of sigma0 and the
    // (linear-in-q) jumps; only the drift enters through the lifted term.
    const double theta = 1.0, T = 1.0, rho = 0.2;
    const auto sol = consumption_solution(theta, T, [rho](double) { return rho; }, 1e-4);
    auto value = [sol](double s, double, std::span<const double> z) {
        return sol.kappa0(s) + sol.kappa1(s) * std::log(z[0]);
    };
    auto ds = [sol](double s, double, std::span<const double> z) {
        return 1.0 + std::log(sol.kappa1(s)) - sol.rho(s) * sol.kappa1(s) - std::log(z[0]);
    };
    auto zero = [](double, double, std::span<const double>) { return 0.0; };
    auto dz = [sol](double s, double, std::span<const double> z, std::size_t) {
        return sol.kappa1(s) / z[0];
    };
    const CylindricalValueFunction phi({TestPolynomial::identity()}, value, ds, zero, zero, dz);

    const JumpMeasure nu({{0.3, 1.5}});
    const auto model = consumption_model([rho](double) { return rho; }, 0.4, 0.6);
    EvalBox box;
    box.terminal_time = T;
    box.s_values = {0.0, 0.3, 0.6, 1.0};
    box.x_values = {0.5, 1.0, 2.0};
    box.scenarios.push_back(GridDensity::normal(GridSpec(-8.0, 8.0, 0.02), 1.0, 0.3));
    box.scenarios.push_back(GridDensity::normal(GridSpec(-8.0, 8.0, 0.02), 2.0, 0.5));
    const auto controls = make_control_grid(0.05, 2.0, 0.01);

    const auto report = hjb_residual(phi, consumption_running_cost(theta), model, nu, controls,
                                     box, 1e-3);
    CHECK(report.pass);
    CHECK(report.max_residual <= 1e-3);
}

TEST_CASE("riccati CSV uses the documented header") {
    const auto curves = riccati_solve(0.3, 0.0, 1.0, 0.1);
    const auto path = std::string("/tmp/mvjump_riccati_test.csv");
    curves.to_csv(path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "s,k1,k2,k3");
}
