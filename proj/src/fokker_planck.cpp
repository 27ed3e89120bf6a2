#include "mvjump/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvjump/csv.hpp"

namespace mvjump {

namespace {

// A*_u with a per-cell control value; the scalar-u public operation and the
// policy-driven stepper both land here.
std::vector<double> adjoint_core(const CoefficientModel& model, const JumpMeasure& nu,
                                 const GridDensity& m, double t,
                                 const std::vector<double>& u_cells, double* max_beta2_out) {
    const std::size_t n = m.size();
    const double dx = m.dx();
    const auto v = m.values();
    const LawView law(m);

    std::vector<double> am(n), bm(n);
    double max_beta2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = m.x(i);
        const double a = model.alpha(t, xi, law, u_cells[i]);
        const double b = model.beta(t, xi, law, u_cells[i]);
        if (!std::isfinite(a) || !std::isfinite(b))
            throw std::runtime_error("apply_adjoint: non-finite coefficient at cell " +
                                     std::to_string(i));
        am[i] = a * v[i];
        bm[i] = b * b * v[i];
        max_beta2 = std::max(max_beta2, b * b);
    }
    if (max_beta2_out) *max_beta2_out = max_beta2;

    const auto d1 = [&](const std::vector<double>& f, std::size_t i) {
        if (i == 0) return (f[1] - f[0]) / dx;
        if (i + 1 == n) return (f[n - 1] - f[n - 2]) / dx;
        return (f[i + 1] - f[i - 1]) / (2.0 * dx);
    };
    const auto d2 = [&](const std::vector<double>& f, std::size_t i) {
        const std::size_t c = i == 0 ? 1 : (i + 1 == n ? n - 2 : i);
        return (f[c + 1] - 2.0 * f[c] + f[c - 1]) / (dx * dx);
    };

    std::vector<double> mv(v.begin(), v.end());
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -d1(am, i) + 0.5 * d2(bm, i);

    const bool uniform_u =
        std::all_of(u_cells.begin(), u_cells.end(), [&](double u) { return u == u_cells[0]; });
    for (const auto& atom : nu.atoms()) {
        if (uniform_u) {
            const double g = model.gamma(t, law, u_cells[0], atom.zeta);
            if (!std::isfinite(g))
                throw std::runtime_error("apply_adjoint: non-finite gamma at atom");
            const auto shifted = gamma_shift(m, g);
            const auto sv = shifted.density.values();
            for (std::size_t i = 0; i < n; ++i)
                out[i] += atom.intensity * (sv[i] - v[i] + g * d1(mv, i));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double g = model.gamma(t, law, u_cells[i], atom.zeta);
                if (std::abs(g) >= m.width())
                    throw std::domain_error("apply_adjoint: shift exceeds grid width");
                out[i] += atom.intensity * (m.value_at(m.x(i) - g) - v[i] + g * d1(mv, i));
            }
        }
    }
    return out;
}

}  // namespace

std::vector<double> apply_adjoint(const CoefficientModel& model, const JumpMeasure& nu,
                                  const GridDensity& m, double t, double u) {
    return adjoint_core(model, nu, m, t, std::vector<double>(m.size(), u), nullptr);
}

GridDensity FpSolution::final_density(double tol_mass) const {
    return GridDensity(grid.x_min, grid.dx, frames.back(), tol_mass);
}

double FpSolution::mass_drift_max() const {
    double worst = 0.0;
    for (double d : mass_drift) worst = std::max(worst, d);
    return worst;
}

void FpSolution::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(frames.size() * grid.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const double t = time_of_frame(f);
        for (std::size_t i = 0; i < grid.size(); ++i)
            rows.push_back({t, grid.x(i), frames[f][i]});
    }
    csv::write(path, {"time", "x", "density"}, rows);
}

FpSolution solve_fp(const CoefficientModel& model, const JumpMeasure& nu, const GridDensity& m0,
                    const ControlPolicy& policy, double dt, double T, const FpOptions& options) {
    if (!(dt > 0.0) || !(T > 0.0) || dt > T * (1.0 + 1e-12))
        throw std::invalid_argument("solve_fp: need 0 < dt <= T");
    const auto K = static_cast<std::size_t>(std::llround(T / dt));
    if (std::abs(static_cast<double>(K) * dt - T) > 1e-6 * std::max(1.0, T))
        throw std::invalid_argument("solve_fp: T/dt is not an integer");

    const GridSpec grid = m0.grid();
    const double dx = grid.dx;
    const std::size_t n = grid.size();

    FpSolution sol;
    sol.grid = grid;
    sol.dt = dt;

    std::vector<double> m(m0.values().begin(), m0.values().end());
    std::vector<double> u_cells(n);

    sol.views.emplace_back(m0);
    sol.mass_drift.push_back(std::abs(m0.trapezoid_mass() - 1.0));
    sol.frame_steps.push_back(0);
    sol.frames.push_back(m);

    const double loose_tol = std::max(m0.tol_mass(), options.mass_drift_tol) + 1e-9;
    for (std::size_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * dt;
        const GridDensity current(grid.x_min, dx, m, loose_tol);
        const LawView law(current);
        for (std::size_t i = 0; i < n; ++i) u_cells[i] = policy(t, grid.x(i), law);

        double max_beta2 = 0.0;
        const auto rhs = adjoint_core(model, nu, current, t, u_cells, &max_beta2);
        if (max_beta2 > 0.0 && dt > dx * dx / max_beta2 * (1.0 + 1e-12))
            throw std::runtime_error("solve_fp: stability violated at step " + std::to_string(k) +
                                     ": dt=" + csv::format_double(dt) + " exceeds dx^2/max(beta^2)=" +
                                     csv::format_double(dx * dx / max_beta2));

        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = m[i] + dt * rhs[i];
            if (v < -options.negative_tol)
                throw std::runtime_error("solve_fp: negative undershoot " + csv::format_double(v) +
                                         " at step " + std::to_string(k) + ", cell " +
                                         std::to_string(i));
            if (v < 0.0) {
                sol.clipped_mass_total += -v * dx;
                v = 0.0;
            }
            m[i] = v;
            mass += (i == 0 || i + 1 == n) ? 0.5 * v : v;
        }
        mass *= dx;
        const double drift = std::abs(mass - 1.0);
        sol.mass_drift.push_back(drift);
        if (drift > options.mass_drift_tol)
            throw std::runtime_error("solve_fp: mass drift " + csv::format_double(drift) +
                                     " beyond tolerance at step " + std::to_string(k));

        sol.views.emplace_back(GridDensity(grid.x_min, dx, m, loose_tol));
        const std::size_t step = k + 1;
        if (step % options.store_stride == 0 || step == K) {
            sol.frame_steps.push_back(step);
            sol.frames.push_back(m);
        }
    }
    return sol;
}

std::complex<double> characteristic_rhs(const EmpiricalEnsemble& ensemble,
                                        const CoefficientModel& model, const JumpMeasure& nu,
                                        double t, double y, double u) {
    const LawView law(ensemble);
    // gamma carries no x, so the jump part of the symbol is one number per call.
    const std::complex<double> jump_part = nu_integral(nu, [&](double zeta) {
        const double g = model.gamma(t, law, u, zeta);
        return std::exp(std::complex<double>(0.0, -y * g)) - 1.0 +
               std::complex<double>(0.0, y * g);
    });

    std::complex<double> acc{0.0, 0.0};
    const auto pos = ensemble.positions();
    for (double xj : pos) {
        const double a = model.alpha(t, xj, law, u);
        const double b = model.beta(t, xj, law, u);
        const std::complex<double> bracket =
            std::complex<double>(0.0, -y * a) - 0.5 * y * y * b * b + jump_part;
        acc += bracket * std::exp(std::complex<double>(0.0, -y * xj));
    }
    return acc / static_cast<double>(pos.size());
}

double CharacteristicCheckReport::worst_excess(double slack) const {
    double worst = -1e300;
    for (const auto& row : rows) worst = std::max(worst, row.discrepancy - row.band - slack);
    return worst;
}

void CharacteristicCheckReport::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows)
        out.push_back({row.t, row.y, row.fd.real(), row.fd.imag(), row.rhs.real(),
                       row.rhs.imag(), row.discrepancy, row.band});
    csv::write(path, {"t", "y", "fd_re", "fd_im", "rhs_re", "rhs_im", "discrepancy", "band"}, out);
}

CharacteristicCheckReport check_characteristic_evolution(const SimulationResult& simulation,
                                                         const CoefficientModel& model,
                                                         const JumpMeasure& nu,
                                                         const std::vector<double>& y_values,
                                                         double h,
                                                         const std::vector<double>& check_times,
                                                         double u) {
    const double dt = simulation.dt;
    if (!(dt > 0.0) || dt > h * (1.0 + 1e-12))
        throw std::invalid_argument("check_characteristic_evolution: need dt <= h");
    const auto r = static_cast<std::size_t>(std::llround(h / dt));
    if (std::abs(static_cast<double>(r) * dt - h) > 1e-9 * std::max(1.0, h))
        throw std::invalid_argument("check_characteristic_evolution: h must be a multiple of dt");

    CharacteristicCheckReport report;
    report.h = h;

    for (double t : check_times) {
        const auto k = static_cast<std::size_t>(std::llround(t / dt));
        if (k + r >= simulation.ensembles.size())
            throw std::domain_error("check_characteristic_evolution: t + h beyond the horizon");
        const auto& now = simulation.ensembles[k];
        const auto& later = simulation.ensembles[k + r];
        const LawView law(now);
        const auto pos_now = now.positions();
        const auto pos_later = later.positions();
        const std::size_t n = pos_now.size();

        for (double y : y_values) {
            const std::complex<double> jump_part = nu_integral(nu, [&](double zeta) {
                const double g = model.gamma(t, law, u, zeta);
                return std::exp(std::complex<double>(0.0, -y * g)) - 1.0 +
                       std::complex<double>(0.0, y * g);
            });

            // Same particles drive both sides, so the per-particle residual
            // d_j has a meaningful sample variance.
            std::complex<double> mean{0.0, 0.0};
            std::vector<std::complex<double>> d(n);
            for (std::size_t j = 0; j < n; ++j) {
                const std::complex<double> e_now =
                    std::exp(std::complex<double>(0.0, -y * pos_now[j]));
                const std::complex<double> e_later =
                    std::exp(std::complex<double>(0.0, -y * pos_later[j]));
                const double a = model.alpha(t, pos_now[j], law, u);
                const double b = model.beta(t, pos_now[j], law, u);
                const std::complex<double> bracket =
                    std::complex<double>(0.0, -y * a) - 0.5 * y * y * b * b + jump_part;
                d[j] = (e_later - e_now) / h - bracket * e_now;
                mean += d[j];
            }
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (const auto& dj : d) var += std::norm(dj - mean);
            var /= static_cast<double>(n);
            const double se = std::sqrt(var / static_cast<double>(n));

            CharacteristicCheckRow row;
            row.t = t;
            row.y = y;
            row.rhs = characteristic_rhs(now, model, nu, t, y, u);
            row.fd = mean + row.rhs;  // mean(d_j) = fd - rhs by construction
            row.discrepancy = std::abs(mean);
            row.band = 3.0 * se;
            report.rows.push_back(row);
            report.max_discrepancy = std::max(report.max_discrepancy, row.discrepancy);
        }
    }
    return report;
}

}  // namespace mvjump
