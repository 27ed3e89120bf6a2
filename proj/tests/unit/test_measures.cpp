#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>

#include "mvjump/measures.hpp"
#include "mvjump/rng.hpp"

using namespace mvjump;

namespace {

constexpr double kStdNormalAt0 = 0.3989422804014327;

GridDensity std_normal_density(double dx = 0.01) {
    return GridDensity::normal(GridSpec(-8.0, 8.0, dx), 0.0, 1.0);
}

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return kStdNormalAt0 / sd * std::exp(-0.5 * z * z);
}

// Random valid density on a small grid (seeded, reusable for properties).
GridDensity random_density(RngStream& rng) {
    const GridSpec grid(-2.0, 2.0, 0.05);
    std::vector<double> v(grid.size());
    for (auto& x : v) x = 0.05 + rng.uniform01();
    double mass = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        mass += (i == 0 || i + 1 == v.size()) ? 0.5 * v[i] : v[i];
    mass *= grid.dx;
    for (auto& x : v) x /= mass;
    return GridDensity(grid.x_min, grid.dx, std::move(v));
}

TestPolynomial random_poly(RngStream& rng) {
    std::vector<double> c(1 + rng.next_u64() % 5);
    for (auto& x : c) x = 2.0 * rng.uniform01() - 1.0;
    return TestPolynomial(std::move(c));
}

}  // namespace

TEST_CASE("pairing: uniform density against q(x)=x gives the midpoint") {
    const auto m = GridDensity::uniform(GridSpec(0.0, 1.0, 0.01));
    CHECK(pairing(m, TestPolynomial::identity()) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pairing: q=1 recovers the mass within tol_mass") {
    const auto m = std_normal_density();
    CHECK(std::abs(pairing(m, TestPolynomial::constant(1.0)) - 1.0) <= 1e-3);
}

TEST_CASE("pairing: Gaussian second moment (quadrature oracle)") {
    const auto m = std_normal_density();
    CHECK(std::abs(pairing(m, TestPolynomial({0.0, 0.0, 1.0})) - 1.0) <= 1e-3);
}

TEST_CASE("pairing is linear in q") {
    RngStream rng(2024, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const auto m = random_density(rng);
        const auto q1 = random_poly(rng);
        const auto q2 = random_poly(rng);
        const double a = 2.0 * rng.uniform01() - 1.0;
        const double b = 2.0 * rng.uniform01() - 1.0;
        std::vector<double> combo(TestPolynomial::kMaxDegree + 1, 0.0);
        for (std::size_t j = 0; j < q1.coefficients().size(); ++j)
            combo[j] += a * q1.coefficients()[j];
        for (std::size_t j = 0; j < q2.coefficients().size(); ++j)
            combo[j] += b * q2.coefficients()[j];
        const double lhs = pairing(m, TestPolynomial(combo));
        const double rhs = a * pairing(m, q1) + b * pairing(m, q2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("pairing overflow names the offending cell") {
    const auto m = std_normal_density(0.1);
    const TestPolynomial huge({0.0, 0.0, 0.0, 0.0, 1e308});
    CHECK_THROWS_WITH_AS(pairing(m, huge), doctest::Contains("grid cell"), std::runtime_error);
}

TEST_CASE("gamma_shift: zero shift is the identity") {
    const auto m = std_normal_density(0.05);
    const auto shifted = gamma_shift(m, 0.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(shifted.density.values()[i] == m.values()[i]);
    CHECK(std::abs(shifted.boundary_mass_lost) <= 1e-12);
}

TEST_CASE("gamma_shift: standard normal shifted is the translated normal") {
    const auto m = std_normal_density();
    for (double gamma : {1.0, 0.505}) {
        const auto shifted = gamma_shift(m, gamma);
        double worst = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double x = m.x(i);
            if (std::abs(x) > 6.0) continue;  // boundary band
            worst = std::max(worst,
                             std::abs(shifted.density.values()[i] - normal_pdf(x, gamma, 1.0)));
        }
        // linear interpolation error <= dx^2 max|m''| / 8
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("gamma_shift duality against the shifted polynomial") {
    const auto m = std_normal_density();
    const auto q = TestPolynomial::identity();
    const double lhs = pairing(gamma_shift(m, 0.5).density, q);
    const double rhs = pairing(m, q.shifted(0.5));
    CHECK(std::abs(lhs - 0.5) <= 1e-3);
    CHECK(std::abs(rhs - 0.5) <= 1e-3);
    CHECK(std::abs(lhs - rhs) <= 1e-3);
}

TEST_CASE("gamma_shift composes within twice the interpolation tolerance") {
    const auto m = std_normal_density(0.02);
    const double g1 = 0.173, g2 = 0.094;
    const auto two_step = gamma_shift(gamma_shift(m, g1).density, g2);
    const auto one_step = gamma_shift(m, g1 + g2);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        worst = std::max(worst, std::abs(two_step.density.values()[i] -
                                         one_step.density.values()[i]));
    const double interp_tol = m.dx() * m.dx() / 8.0 * kStdNormalAt0;  // max|m''| = pdf(0)
    CHECK(worst <= 2.0 * interp_tol);
}

TEST_CASE("gamma_shift rejects shifts wider than the grid") {
    const auto m = std_normal_density(0.1);
    CHECK_THROWS_AS(gamma_shift(m, 17.0), std::domain_error);
}

TEST_CASE("characteristic_function: y=0 is exactly one") {
    const EmpiricalEnsemble e({0.4, -1.2, 3.0});
    CHECK(characteristic_function(e, 0.0) == std::complex<double>(1.0, 0.0));
}

TEST_CASE("characteristic_function: point mass at 2 evaluated at pi") {
    const EmpiricalEnsemble e(std::vector<double>(10, 2.0));
    const auto value = characteristic_function(e, 3.141592653589793238462643);
    CHECK(value.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(value.imag()) <= 1e-12);
}

TEST_CASE("characteristic_function conjugate symmetry is exact") {
    RngStream rng(7, 0);
    std::vector<double> pos(200);
    for (auto& p : pos) p = 3.0 * rng.normal();
    const EmpiricalEnsemble e(pos);
    for (double y : {0.3, 1.7, -2.5}) {
        const auto plus = characteristic_function(e, y);
        const auto minus = characteristic_function(e, -y);
        CHECK(minus == std::conj(plus));
    }
}

TEST_CASE("characteristic_function: Gaussian sample matches exp(-1/2)") {
    RngStream rng(11, 0);
    std::vector<double> pos(100000);
    for (auto& p : pos) p = rng.normal();
    const EmpiricalEnsemble e(pos);
    const auto value = characteristic_function(e, 1.0);
    CHECK(std::abs(value - std::complex<double>(0.6065306597126334, 0.0)) <=
          3.0 / std::sqrt(1e5));
    CHECK(std::abs(value) <= 1.0 + 1e-12);
}

TEST_CASE("density_from_ensemble: single particle gives the kernel itself") {
    const EmpiricalEnsemble e({0.0});
    const auto kde = density_from_ensemble(e, GridSpec(-8.0, 8.0, 0.01), 0.5);
    CHECK(kde.value_at(0.0) == doctest::Approx(normal_pdf(0.0, 0.0, 0.5)).epsilon(1e-6));
    CHECK(std::abs(kde.trapezoid_mass() - 1.0) <= 1e-12);
}

TEST_CASE("density_from_ensemble: KDE consistency against the true density") {
    RngStream rng(13, 0);
    std::vector<double> pos(100000);
    for (auto& p : pos) p = rng.normal();
    const auto kde = density_from_ensemble(EmpiricalEnsemble(pos), GridSpec(-8.0, 8.0, 0.02), 0.1);
    double l1 = 0.0;
    for (std::size_t i = 0; i < kde.size(); ++i)
        l1 += std::abs(kde.values()[i] - normal_pdf(kde.x(i), 0.0, 1.0)) * kde.dx();
    CHECK(l1 <= 0.05);
}

TEST_CASE("density_from_ensemble rejects nonpositive bandwidth") {
    const EmpiricalEnsemble e({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(density_from_ensemble(e, GridSpec(-1.0, 3.0, 0.1), 0.0),
                    std::invalid_argument);
}

TEST_CASE("GridDensity invariants") {
    CHECK_THROWS_AS(GridDensity(0.0, 0.1, {1.0, -0.1, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(GridDensity(0.0, 1.0, {5.0, 5.0, 5.0}), std::invalid_argument);  // mass far from 1
    CHECK_THROWS_WITH_AS(GridDensity(0.0, 1.0, {0.5, std::nan(""), 0.5}),
                         doctest::Contains("cell 1"), std::invalid_argument);
    const auto m = std_normal_density(0.05);
    CHECK(std::abs(m.k_weighted_norm() - 2.0) <= 1e-3);  // int (1+x^2) phi = 2
}

TEST_CASE("CSV round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "mvjump_measures_test";
    std::filesystem::create_directories(dir);
    const auto m = std_normal_density(0.25);
    m.to_csv((dir / "density.csv").string());
    const auto m2 = GridDensity::from_csv((dir / "density.csv").string());
    REQUIRE(m2.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m2.values()[i] == m.values()[i]);

    const EmpiricalEnsemble e({0.25, -1.5, 2.75});
    e.to_csv((dir / "ensemble.csv").string());
    const auto e2 = EmpiricalEnsemble::from_csv((dir / "ensemble.csv").string());
    REQUIRE(e2.size() == e.size());
    for (std::size_t j = 0; j < e.size(); ++j) CHECK(e2.positions()[j] == e.positions()[j]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("LawView pairing agrees with direct quadrature") {
    RngStream rng(5, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto m = random_density(rng);
        const auto q = random_poly(rng);
        CHECK(LawView(m).pairing(q) == doctest::Approx(pairing(m, q)).epsilon(1e-10));
    }
    const EmpiricalEnsemble e({0.3, 1.1, -0.7, 2.2});
    const auto q = TestPolynomial({1.0, -2.0, 0.5, 0.0, 1.0});
    CHECK(LawView(e).pairing(q) == doctest::Approx(pairing(e, q)).epsilon(1e-12));
}

TEST_CASE("TestPolynomial: degree cap and shift expansion") {
    CHECK_THROWS_AS(TestPolynomial({1, 1, 1, 1, 1, 1}), std::invalid_argument);
    const TestPolynomial q({1.0, -2.0, 0.0, 3.0});
    const auto shifted = q.shifted(0.7);
    for (double x : {-1.3, 0.0, 2.4}) CHECK(shifted(x) == doctest::Approx(q(x + 0.7)).epsilon(1e-12));
    const auto d = q.derivative();
    CHECK(d(2.0) == doctest::Approx(-2.0 + 9.0 * 4.0));
}
