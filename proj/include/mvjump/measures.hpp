#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mvjump {

/// Uniform grid on [x_min, x_max] with spacing dx; (x_max - x_min)/dx must be
/// (numerically) an integer.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    double dx = 0.01;

    GridSpec() = default;
    GridSpec(double x_min_, double x_max_, double dx_);

    std::size_t size() const { return n_; }
    double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
    double width() const { return x_max - x_min; }

  private:
    std::size_t n_ = 101;
};

/// Polynomial test function q(x) = sum_j c_j x^j, degree <= 4. Degree is
/// capped so pairings stay meaningful against K-weighted densities on
/// truncated grids.
class TestPolynomial {
  public:
    static constexpr std::size_t kMaxDegree = 4;

    explicit TestPolynomial(std::vector<double> coefficients);

    static TestPolynomial constant(double c) { return TestPolynomial({c}); }
    static TestPolynomial identity() { return TestPolynomial({0.0, 1.0}); }

    double operator()(double x) const;
    std::size_t degree() const { return coeffs_.size() - 1; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    TestPolynomial derivative() const;
    TestPolynomial second_derivative() const { return derivative().derivative(); }
    /// q(x + gamma) expanded back into coefficient form.
    TestPolynomial shifted(double gamma) const;

  private:
    std::vector<double> coeffs_;
};

/// Probability density m on a uniform grid; the grid's trapezoidal mass must
/// stay within tol_mass of 1 and all values must be nonnegative. Density is
/// treated as 0 outside the grid.
class GridDensity {
  public:
    GridDensity(double x_min, double dx, std::vector<double> values, double tol_mass = 1e-3);

    /// Samples the N(mean, stddev^2) pdf on the grid (no renormalisation; the
    /// truncated tail has to fit inside tol_mass).
    static GridDensity normal(const GridSpec& grid, double mean, double stddev,
                              double tol_mass = 1e-3);
    static GridDensity uniform(const GridSpec& grid, double tol_mass = 1e-3);

    std::size_t size() const { return values_.size(); }
    double x_min() const { return x_min_; }
    double dx() const { return dx_; }
    double x_max() const { return x_min_ + dx_ * static_cast<double>(values_.size() - 1); }
    double width() const { return x_max() - x_min_; }
    double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
    double tol_mass() const { return tol_mass_; }
    std::span<const double> values() const { return values_; }
    GridSpec grid() const { return GridSpec(x_min_, x_max(), dx_); }

    double trapezoid_mass() const;
    /// int m(x) (1 + x^2) dx, the weight used by the K-norm.
    double k_weighted_norm() const;
    /// Linear interpolation; 0 outside the grid.
    double value_at(double x) const;

    void to_csv(const std::string& path) const;  // header: x,density
    static GridDensity from_csv(const std::string& path, double tol_mass = 1e-3);

  private:
    double x_min_;
    double dx_;
    double tol_mass_;
    std::vector<double> values_;
};

/// N equally weighted particle positions; the Monte Carlo stand-in for the
/// law of the state.
class EmpiricalEnsemble {
  public:
    explicit EmpiricalEnsemble(std::vector<double> positions);

    std::size_t size() const { return positions_.size(); }
    std::span<const double> positions() const { return positions_; }
    double mean() const;
    double second_moment() const;

    void to_csv(const std::string& path) const;  // header: particle_index,position
    static EmpiricalEnsemble from_csv(const std::string& path);

  private:
    std::vector<double> positions_;
};

/// Read-only snapshot of a law, reduced to its raw moments 0..4. That is all
/// a TestPolynomial pairing can see, and it makes coefficient evaluation O(1)
/// per call instead of O(grid) or O(particles).
class LawView {
  public:
    explicit LawView(std::array<double, 5> raw_moments) : moments_(raw_moments) {}
    explicit LawView(const GridDensity& density);
    explicit LawView(const EmpiricalEnsemble& ensemble);

    double pairing(const TestPolynomial& q) const;
    double mean() const { return moments_[1]; }
    double raw_moment(std::size_t p) const { return moments_.at(p); }

    /// Moments of N(0,1); used to spot-check user-supplied evaluators.
    static LawView standard_probe() { return LawView({1.0, 0.0, 1.0, 0.0, 3.0}); }

  private:
    std::array<double, 5> moments_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// <m, q> by trapezoidal quadrature.
double pairing(const GridDensity& m, const TestPolynomial& q);
/// <m, q> as the sample average of q over the particles.
double pairing(const EmpiricalEnsemble& ensemble, const TestPolynomial& q);

struct ShiftedDensity {
    GridDensity density;
    /// Trapezoidal mass pushed off the grid boundary by the shift. Reported,
    /// never silently renormalised.
    double boundary_mass_lost = 0.0;
};

/// The gamma-shift m^(gamma)(x) = m(x - gamma), by linear interpolation.
/// Requires |gamma| < grid width.
ShiftedDensity gamma_shift(const GridDensity& m, double gamma);

/// (1/N) sum_j exp(-i y X_j), the Fourier transform of the empirical law at y.
std::complex<double> characteristic_function(const EmpiricalEnsemble& ensemble, double y);

/// Gaussian kernel density estimate on the grid, renormalised to unit
/// trapezoidal mass.
GridDensity density_from_ensemble(const EmpiricalEnsemble& ensemble, const GridSpec& grid,
                                  double bandwidth);

/// Silverman's rule of thumb; the documented default bandwidth.
double silverman_bandwidth(const EmpiricalEnsemble& ensemble);

}  // namespace mvjump
