#include "mvjump/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvjump/csv.hpp"
#include "mvjump/parallel.hpp"

namespace mvjump {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;

double normal_pdf(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return kInvSqrt2Pi / stddev * std::exp(-0.5 * z * z);
}

double trapezoid(std::span<const double> v, double dx) {
    if (v.size() < 2) return 0.0;
    double sum = 0.0;
    for (double x : v) sum += x;
    sum -= 0.5 * (v.front() + v.back());
    return sum * dx;
}

}  // namespace

// GridSpec -------------------------------------------------------------

GridSpec::GridSpec(double x_min_, double x_max_, double dx_)
    : x_min(x_min_), x_max(x_max_), dx(dx_) {
    if (!(dx > 0.0)) throw std::invalid_argument("GridSpec: dx must be > 0");
    if (!(x_max > x_min)) throw std::invalid_argument("GridSpec: x_max must exceed x_min");
    const double cells = (x_max - x_min) / dx;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-6 * std::max(1.0, cells))
        throw std::invalid_argument("GridSpec: (x_max - x_min)/dx is not an integer");
    n_ = static_cast<std::size_t>(rounded) + 1;
}

// TestPolynomial -------------------------------------------------------

TestPolynomial::TestPolynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
    if (coeffs_.size() > kMaxDegree + 1)
        throw std::invalid_argument("TestPolynomial: degree must be <= 4");
    for (double c : coeffs_)
        if (!std::isfinite(c)) throw std::invalid_argument("TestPolynomial: non-finite coefficient");
}

double TestPolynomial::operator()(double x) const {
    double acc = 0.0;
    for (std::size_t j = coeffs_.size(); j-- > 0;) acc = acc * x + coeffs_[j];
    return acc;
}

TestPolynomial TestPolynomial::derivative() const {
    if (coeffs_.size() == 1) return TestPolynomial({0.0});
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t j = 1; j < coeffs_.size(); ++j)
        d[j - 1] = coeffs_[j] * static_cast<double>(j);
    return TestPolynomial(std::move(d));
}

TestPolynomial TestPolynomial::shifted(double gamma) const {
    // q(x + g) = sum_j c_j sum_{k<=j} C(j,k) g^{j-k} x^k
    static const double binom[5][5] = {{1, 0, 0, 0, 0},
                                       {1, 1, 0, 0, 0},
                                       {1, 2, 1, 0, 0},
                                       {1, 3, 3, 1, 0},
                                       {1, 4, 6, 4, 1}};
    std::vector<double> out(coeffs_.size(), 0.0);
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
        double gpow = 1.0;
        for (std::size_t k = j + 1; k-- > 0;) {
            out[k] += coeffs_[j] * binom[j][k] * gpow;
            gpow *= gamma;
        }
    }
    return TestPolynomial(std::move(out));
}

// GridDensity ----------------------------------------------------------

GridDensity::GridDensity(double x_min, double dx, std::vector<double> values, double tol_mass)
    : x_min_(x_min), dx_(dx), tol_mass_(tol_mass), values_(std::move(values)) {
    if (!(dx_ > 0.0)) throw std::invalid_argument("GridDensity: dx must be > 0");
    if (values_.size() < 2) throw std::invalid_argument("GridDensity: need at least 2 grid points");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw std::invalid_argument("GridDensity: non-finite value at cell " + std::to_string(i));
        if (values_[i] < 0.0)
            throw std::invalid_argument("GridDensity: negative value at cell " + std::to_string(i));
    }
    const double mass = trapezoid_mass();
    if (std::abs(mass - 1.0) > tol_mass_)
        throw std::invalid_argument("GridDensity: trapezoidal mass " + csv::format_double(mass) +
                                    " outside 1 +/- " + csv::format_double(tol_mass_));
}

GridDensity GridDensity::normal(const GridSpec& grid, double mean, double stddev, double tol_mass) {
    if (!(stddev > 0.0)) throw std::invalid_argument("GridDensity::normal: stddev must be > 0");
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = normal_pdf(grid.x(i), mean, stddev);
    return GridDensity(grid.x_min, grid.dx, std::move(v), tol_mass);
}

GridDensity GridDensity::uniform(const GridSpec& grid, double tol_mass) {
    std::vector<double> v(grid.size(), 1.0 / grid.width());
    return GridDensity(grid.x_min, grid.dx, std::move(v), tol_mass);
}

double GridDensity::trapezoid_mass() const { return trapezoid(values_, dx_); }

double GridDensity::k_weighted_norm() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double xi = x(i);
        double w = values_[i] * (1.0 + xi * xi);
        if (i == 0 || i + 1 == values_.size()) w *= 0.5;
        sum += w;
    }
    return sum * dx_;
}

double GridDensity::value_at(double xq) const {
    const double pos = (xq - x_min_) / dx_;
    if (pos < 0.0 || pos > static_cast<double>(values_.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) return values_.back();
    const double theta = pos - static_cast<double>(i);
    // Snap to the node when rounding of the query position would otherwise
    // turn an exact grid hit into a spurious interpolation.
    if (theta < 1e-9) return values_[i];
    if (theta > 1.0 - 1e-9) return values_[i + 1];
    return (1.0 - theta) * values_[i] + theta * values_[i + 1];
}

void GridDensity::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) rows.push_back({x(i), values_[i]});
    csv::write(path, {"x", "density"}, rows);
}

GridDensity GridDensity::from_csv(const std::string& path, double tol_mass) {
    const auto table = csv::read(path);
    if (table.header != std::vector<std::string>{"x", "density"})
        throw std::runtime_error("GridDensity::from_csv: unexpected header in " + path);
    if (table.rows.size() < 2) throw std::runtime_error("GridDensity::from_csv: too few rows");
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) values.push_back(row[1]);
    const double x_min = table.rows.front()[0];
    const double dx = table.rows[1][0] - x_min;
    return GridDensity(x_min, dx, std::move(values), tol_mass);
}

// EmpiricalEnsemble ----------------------------------------------------

EmpiricalEnsemble::EmpiricalEnsemble(std::vector<double> positions)
    : positions_(std::move(positions)) {
    if (positions_.empty()) throw std::invalid_argument("EmpiricalEnsemble: N must be >= 1");
    for (std::size_t j = 0; j < positions_.size(); ++j)
        if (!std::isfinite(positions_[j]))
            throw std::invalid_argument("EmpiricalEnsemble: non-finite position for particle " +
                                        std::to_string(j));
}

double EmpiricalEnsemble::mean() const {
    double sum = 0.0;
    for (double p : positions_) sum += p;
    return sum / static_cast<double>(positions_.size());
}

double EmpiricalEnsemble::second_moment() const {
    double sum = 0.0;
    for (double p : positions_) sum += p * p;
    return sum / static_cast<double>(positions_.size());
}

void EmpiricalEnsemble::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(positions_.size());
    for (std::size_t j = 0; j < positions_.size(); ++j)
        rows.push_back({static_cast<double>(j), positions_[j]});
    csv::write(path, {"particle_index", "position"}, rows);
}

EmpiricalEnsemble EmpiricalEnsemble::from_csv(const std::string& path) {
    const auto table = csv::read(path);
    if (table.header != std::vector<std::string>{"particle_index", "position"})
        throw std::runtime_error("EmpiricalEnsemble::from_csv: unexpected header in " + path);
    std::vector<double> positions;
    positions.reserve(table.rows.size());
    for (const auto& row : table.rows) positions.push_back(row[1]);
    return EmpiricalEnsemble(std::move(positions));
}

// LawView ----------------------------------------------------------------

LawView::LawView(const GridDensity& density) {
    moments_.fill(0.0);
    const auto v = density.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double xi = density.x(i);
        double w = v[i] * density.dx();
        if (i == 0 || i + 1 == v.size()) w *= 0.5;
        double xpow = 1.0;
        for (auto& mom : moments_) {
            mom += w * xpow;
            xpow *= xi;
        }
    }
}

LawView::LawView(const EmpiricalEnsemble& ensemble) {
    moments_.fill(0.0);
    for (double p : ensemble.positions()) {
        double xpow = 1.0;
        for (auto& mom : moments_) {
            mom += xpow;
            xpow *= p;
        }
    }
    for (auto& mom : moments_) mom /= static_cast<double>(ensemble.size());
}

double LawView::pairing(const TestPolynomial& q) const {
    const auto& c = q.coefficients();
    double acc = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p) acc += c[p] * moments_[p];
    return acc;
}

// Operations -------------------------------------------------------------

double pairing(const GridDensity& m, const TestPolynomial& q) {
    const auto v = m.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double term = q(m.x(i)) * v[i];
        if (i == 0 || i + 1 == v.size()) term *= 0.5;
        sum += term;
        if (!std::isfinite(sum))
            throw std::runtime_error("pairing: numerical overflow at grid cell " +
                                     std::to_string(i) + " (x=" + csv::format_double(m.x(i)) + ")");
    }
    return sum * m.dx();
}

double pairing(const EmpiricalEnsemble& ensemble, const TestPolynomial& q) {
    double sum = 0.0;
    const auto pos = ensemble.positions();
    for (std::size_t j = 0; j < pos.size(); ++j) {
        sum += q(pos[j]);
        if (!std::isfinite(sum))
            throw std::runtime_error("pairing: numerical overflow at particle " + std::to_string(j));
    }
    return sum / static_cast<double>(pos.size());
}

ShiftedDensity gamma_shift(const GridDensity& m, double gamma) {
    if (std::abs(gamma) >= m.width())
        throw std::domain_error("gamma_shift: |gamma| must be smaller than the grid width");
    std::vector<double> shifted(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) shifted[i] = m.value_at(m.x(i) - gamma);
    const double mass_before = m.trapezoid_mass();
    double mass_after = 0.0;
    for (double v : shifted) mass_after += v;
    mass_after -= 0.5 * (shifted.front() + shifted.back());
    mass_after *= m.dx();
    const double lost = mass_before - mass_after;
    // The shifted object may have lost boundary mass; widen its tolerance so
    // the invariant reflects the reported loss instead of rejecting it.
    const double tol = m.tol_mass() + std::abs(lost) + 1e-12;
    return ShiftedDensity{GridDensity(m.x_min(), m.dx(), std::move(shifted), tol), lost};
}

std::complex<double> characteristic_function(const EmpiricalEnsemble& ensemble, double y) {
    double re = 0.0, im = 0.0;
    for (double xj : ensemble.positions()) {
        re += std::cos(y * xj);
        im -= std::sin(y * xj);
    }
    const double n = static_cast<double>(ensemble.size());
    return {re / n, im / n};
}

GridDensity density_from_ensemble(const EmpiricalEnsemble& ensemble, const GridSpec& grid,
                                  double bandwidth) {
    if (!(bandwidth > 0.0))
        throw std::invalid_argument("density_from_ensemble: bandwidth must be > 0");
    const auto pos = ensemble.positions();
    std::vector<double> v(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(pos.size()) * bandwidth);
    parallel_for(v.size(), [&](std::size_t i) {
        const double xi = grid.x(i);
        double acc = 0.0;
        for (double xj : pos) {
            const double z = (xi - xj) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        v[i] = acc * scale * kInvSqrt2Pi;
    });
    const double mass = trapezoid(v, grid.dx);
    if (!(mass > 0.0))
        throw std::runtime_error("density_from_ensemble: estimate has zero mass on the grid");
    for (double& x : v) x /= mass;
    return GridDensity(grid.x_min, grid.dx, std::move(v), 1e-9);
}

double silverman_bandwidth(const EmpiricalEnsemble& ensemble) {
    const auto pos = ensemble.positions();
    const double n = static_cast<double>(pos.size());
    const double mean = ensemble.mean();
    double var = 0.0;
    for (double p : pos) var += (p - mean) * (p - mean);
    var /= n;
    std::vector<double> sorted(pos.begin(), pos.end());
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double idx = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(idx);
        const double frac = idx - static_cast<double>(lo);
        return lo + 1 < sorted.size() ? (1.0 - frac) * sorted[lo] + frac * sorted[lo + 1]
                                      : sorted.back();
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::sqrt(var);
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (!(spread > 0.0)) spread = std::max(std::abs(mean), 1.0);  // degenerate sample
    return 0.9 * spread * std::pow(n, -0.2);
}

}  // namespace mvjump
