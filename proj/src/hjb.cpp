#include "mvjump/hjb.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "mvjump/parallel.hpp"

namespace mvjump {

namespace {

using nlohmann::json;

void check_probe(double v, const char* what) {
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string("CylindricalValueFunction: ") + what +
                                    " is not finite on the probe point");
}

}  // namespace

// CylindricalValueFunction --------------------------------------------------

CylindricalValueFunction::CylindricalValueFunction(std::vector<TestPolynomial> test_polys,
                                                   Outer value, Outer ds, Outer dx, Outer dxx,
                                                   OuterPartial dz)
    : test_polys_(std::move(test_polys)),
      value_(std::move(value)),
      ds_(std::move(ds)),
      dx_(std::move(dx)),
      dxx_(std::move(dxx)),
      dz_(std::move(dz)) {
    if (test_polys_.size() > 4)
        throw std::invalid_argument("CylindricalValueFunction: at most 4 test polynomials");
    if (!value_ || !ds_ || !dx_ || !dxx_ || !dz_)
        throw std::invalid_argument("CylindricalValueFunction: all evaluators must be set");
    const std::vector<double> z(test_polys_.size(), 0.5);
    check_probe(value_(0.0, 0.0, z), "F");
    check_probe(ds_(0.0, 0.0, z), "dF/ds");
    check_probe(dx_(0.0, 0.0, z), "dF/dx");
    check_probe(dxx_(0.0, 0.0, z), "d2F/dx2");
    for (std::size_t i = 0; i < test_polys_.size(); ++i) check_probe(dz_(0.0, 0.0, z, i), "dF/dz");
}

CylindricalValueFunction CylindricalValueFunction::with_numeric_derivatives(
    std::vector<TestPolynomial> test_polys, Outer value, double h_s, double h_x, double h_z) {
    if (!(h_s > 0.0) || !(h_x > 0.0) || !(h_z > 0.0))
        throw std::invalid_argument("with_numeric_derivatives: steps must be > 0");
    auto ds = [value, h_s](double s, double x, std::span<const double> z) {
        return (value(s + h_s, x, z) - value(s - h_s, x, z)) / (2.0 * h_s);
    };
    auto dx = [value, h_x](double s, double x, std::span<const double> z) {
        return (value(s, x + h_x, z) - value(s, x - h_x, z)) / (2.0 * h_x);
    };
    auto dxx = [value, h_x](double s, double x, std::span<const double> z) {
        return (value(s, x + h_x, z) - 2.0 * value(s, x, z) + value(s, x - h_x, z)) / (h_x * h_x);
    };
    auto dz = [value, h_z](double s, double x, std::span<const double> z, std::size_t i) {
        std::vector<double> hi(z.begin(), z.end()), lo(z.begin(), z.end());
        hi[i] += h_z;
        lo[i] -= h_z;
        return (value(s, x, hi) - value(s, x, lo)) / (2.0 * h_z);
    };
    return CylindricalValueFunction(std::move(test_polys), std::move(value), std::move(ds),
                                    std::move(dx), std::move(dxx), std::move(dz));
}

std::vector<double> CylindricalValueFunction::pairings(const GridDensity& m) const {
    std::vector<double> z;
    z.reserve(test_polys_.size());
    for (const auto& q : test_polys_) z.push_back(pairing(m, q));
    return z;
}

// Generator pieces ------------------------------------------------------------

ControlGrid make_control_grid(double u_min, double u_max, double du) {
    if (!(du > 0.0) || !(u_max >= u_min))
        throw std::invalid_argument("make_control_grid: need du > 0 and u_max >= u_min");
    ControlGrid grid;
    const auto n = static_cast<std::size_t>(std::floor((u_max - u_min) / du + 1e-9)) + 1;
    grid.reserve(n);
    for (std::size_t i = 0; i < n; ++i) grid.push_back(u_min + du * static_cast<double>(i));
    return grid;
}

double pairing_with_generator(const CoefficientModel& model, const JumpMeasure& nu,
                              const GridDensity& m, const LawView& law, double s,
                              const TestPolynomial& q, double u) {
    const TestPolynomial qp = q.derivative();
    const TestPolynomial qpp = qp.derivative();

    // gamma is x-free: expand the jump bracket of q once as a polynomial in x.
    std::vector<double> jump_coeffs(q.coefficients().size(), 0.0);
    for (const auto& atom : nu.atoms()) {
        const double g = model.gamma(s, law, u, atom.zeta);
        const TestPolynomial shifted = q.shifted(g);
        for (std::size_t c = 0; c < shifted.coefficients().size(); ++c)
            jump_coeffs[c] += atom.intensity * (shifted.coefficients()[c] - q.coefficients()[c]);
        for (std::size_t c = 0; c < qp.coefficients().size(); ++c)
            jump_coeffs[c] -= atom.intensity * g * qp.coefficients()[c];
    }
    const TestPolynomial jump_poly(std::move(jump_coeffs));

    const auto v = m.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double xi = m.x(i);
        const double a = model.alpha(s, xi, law, u);
        const double b = model.beta(s, xi, law, u);
        double term = (a * qp(xi) + 0.5 * b * b * qpp(xi) + jump_poly(xi)) * v[i];
        if (i == 0 || i + 1 == v.size()) term *= 0.5;
        acc += term;
    }
    return acc * m.dx();
}

namespace {

// Shared generator core once per-point data (law, pairings) is in hand.
double generator_core(const CylindricalValueFunction& phi, const CoefficientModel& model,
                      const JumpMeasure& nu, double s, double x, const GridDensity& m,
                      const LawView& law, std::span<const double> z, double u) {
    double lifted = 0.0;
    for (std::size_t i = 0; i < phi.test_polys().size(); ++i)
        lifted += phi.dz(s, x, z, i) *
                  pairing_with_generator(model, nu, m, law, s, phi.test_polys()[i], u);

    const double a = model.alpha(s, x, law, u);
    const double b = model.beta(s, x, law, u);
    double value = phi.ds(s, x, z) + a * phi.dx(s, x, z) + lifted + 0.5 * b * b * phi.dxx(s, x, z);

    if (!nu.empty()) {
        const double phi_here = phi.value(s, x, z);
        const double phi_x = phi.dx(s, x, z);
        for (const auto& atom : nu.atoms()) {
            const double g = model.gamma(s, law, u, atom.zeta);
            value += atom.intensity * (phi.value(s, x + g, z) - phi_here - g * phi_x);
        }
    }
    return value;
}

}  // namespace

double lifted_m_derivative(const CylindricalValueFunction& phi, const CoefficientModel& model,
                           const JumpMeasure& nu, double s, double x, const GridDensity& m,
                           double u) {
    const LawView law(m);
    const auto z = phi.pairings(m);
    double lifted = 0.0;
    for (std::size_t i = 0; i < phi.test_polys().size(); ++i)
        lifted += phi.dz(s, x, z, i) *
                  pairing_with_generator(model, nu, m, law, s, phi.test_polys()[i], u);
    return lifted;
}

double generator_apply(const CylindricalValueFunction& phi, const CoefficientModel& model,
                       const JumpMeasure& nu, double s, double x, const GridDensity& m, double u) {
    const LawView law(m);
    const auto z = phi.pairings(m);
    return generator_core(phi, model, nu, s, x, m, law, z, u);
}

// hjb_residual -----------------------------------------------------------------

std::string HjbReport::to_json() const {
    json j;
    j["max_residual"] = max_residual;
    j["argmax_control"] = argmax_control;
    j["worst_point"] = {{"s", worst.s}, {"x", worst.x}, {"scenario", worst.scenario}};
    j["terminal_mismatch"] = terminal_mismatch;
    j["tolerance"] = tolerance;
    j["pass"] = pass;
    return j.dump(2);
}

HjbReport hjb_residual(const CylindricalValueFunction& phi, const RunningCost& cost,
                       const CoefficientModel& model, const JumpMeasure& nu,
                       const ControlGrid& controls, const EvalBox& box, double tolerance) {
    if (controls.empty()) throw std::invalid_argument("hjb_residual: empty control grid");
    if (box.scenarios.empty()) throw std::invalid_argument("hjb_residual: no density scenarios");

    HjbReport report;
    report.tolerance = tolerance;

    for (std::size_t sc = 0; sc < box.scenarios.size(); ++sc) {
        const GridDensity& m = box.scenarios[sc];
        const LawView law(m);
        const auto z = phi.pairings(m);

        // Terminal condition on this scenario.
        for (double x : box.x_values) {
            const double mismatch =
                std::abs(phi.value(box.terminal_time, x, z) - cost.g(x, law));
            if (mismatch > report.terminal_mismatch) report.terminal_mismatch = mismatch;
        }

        struct SliceResult {
            double best_abs = -1.0;
            double residual = 0.0;
            double argmax_u = 0.0;
            double x = 0.0;
        };
        std::vector<SliceResult> slices(box.s_values.size());

        parallel_for(box.s_values.size(), [&](std::size_t si) {
            const double s = box.s_values[si];
            // sup over the control grid, per x; the pairing part of the
            // generator does not depend on x, so hoist it per control.
            std::vector<double> best(box.x_values.size(), -1e300);
            std::vector<double> best_u(box.x_values.size(), controls.front());
            const std::size_t k = phi.test_polys().size();
            std::vector<double> lift_pair(k);
            for (double u : controls) {
                for (std::size_t i = 0; i < k; ++i)
                    lift_pair[i] =
                        pairing_with_generator(model, nu, m, law, s, phi.test_polys()[i], u);
                std::vector<double> gammas;
                gammas.reserve(nu.atoms().size());
                for (const auto& atom : nu.atoms()) gammas.push_back(model.gamma(s, law, u, atom.zeta));
                for (std::size_t xi = 0; xi < box.x_values.size(); ++xi) {
                    const double x = box.x_values[xi];
                    double lifted = 0.0;
                    for (std::size_t i = 0; i < k; ++i) lifted += phi.dz(s, x, z, i) * lift_pair[i];
                    const double a = model.alpha(s, x, law, u);
                    const double b = model.beta(s, x, law, u);
                    double g_phi = phi.ds(s, x, z) + a * phi.dx(s, x, z) + lifted +
                                   0.5 * b * b * phi.dxx(s, x, z);
                    if (!nu.empty()) {
                        const double phi_here = phi.value(s, x, z);
                        const double phi_x = phi.dx(s, x, z);
                        for (std::size_t ai = 0; ai < gammas.size(); ++ai)
                            g_phi += nu.atoms()[ai].intensity *
                                     (phi.value(s, x + gammas[ai], z) - phi_here -
                                      gammas[ai] * phi_x);
                    }
                    const double val = cost.f(s, x, law, u) + g_phi;
                    if (val > best[xi]) {  // strict: ties keep the lowest grid index
                        best[xi] = val;
                        best_u[xi] = u;
                    }
                }
            }
            SliceResult slice;
            for (std::size_t xi = 0; xi < box.x_values.size(); ++xi) {
                const double res = std::abs(best[xi]);
                if (res > slice.best_abs) {
                    slice.best_abs = res;
                    slice.residual = best[xi];
                    slice.argmax_u = best_u[xi];
                    slice.x = box.x_values[xi];
                }
            }
            slices[si] = slice;
        });

        for (std::size_t si = 0; si < slices.size(); ++si) {
            if (slices[si].best_abs > report.max_residual) {
                report.max_residual = slices[si].best_abs;
                report.argmax_control = slices[si].argmax_u;
                report.worst = {box.s_values[si], slices[si].x, sc};
            }
        }
    }

    report.pass = report.max_residual <= tolerance && report.terminal_mismatch <= tolerance;
    return report;
}

// estimate_performance ----------------------------------------------------------

PerformanceEstimate estimate_performance(const CoefficientModel& model,
                                         const ControlPolicy& policy, const JumpMeasure& nu,
                                         const RunningCost& cost, double x0, std::size_t N,
                                         double dt, double T, std::uint64_t seed,
                                         std::size_t replicates) {
    if (replicates == 0) throw std::invalid_argument("estimate_performance: replicates >= 1");

    PerformanceEstimate out;
    out.replicate_values.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        std::uint64_t mix = seed;
        splitmix64(mix);
        const auto sim = simulate_particles(model, policy, nu, x0, N, dt, T,
                                            mix + 0x9e3779b97f4a7c15ULL * r);
        const std::size_t K = sim.steps();
        const std::size_t n = sim.ensembles.front().size();
        std::vector<double> path_cost(n, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const double t = sim.times[k];
            const LawView law(sim.ensembles[k]);
            const auto pos = sim.ensembles[k].positions();
            parallel_for(n, [&](std::size_t j) {
                const double u = policy(t, pos[j], law);
                path_cost[j] += cost.f(t, pos[j], law, u) * dt;
            });
        }
        const LawView law_T(sim.ensembles.back());
        const auto pos_T = sim.ensembles.back().positions();
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += path_cost[j] + cost.g(pos_T[j], law_T);
        out.replicate_values.push_back(total / static_cast<double>(n));
    }

    double mean = 0.0;
    for (double v : out.replicate_values) mean += v;
    mean /= static_cast<double>(replicates);
    out.estimate = mean;
    if (replicates > 1) {
        double var = 0.0;
        for (double v : out.replicate_values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(replicates - 1);
        out.std_error = std::sqrt(var / static_cast<double>(replicates));
    }
    return out;
}

// Games ---------------------------------------------------------------------------

CoefficientModel fix_control(const GameCoefficientModel& game, int player, double frozen_value) {
    if (player != 1 && player != 2) throw std::invalid_argument("fix_control: player is 1 or 2");
    auto alpha = game.alpha;
    auto beta = game.beta;
    auto gamma = game.gamma;
    if (player == 2) {  // freeze player 2, expose u1
        return CoefficientModel(
            [alpha, frozen_value](double t, double x, const LawView& law, double u) {
                return alpha(t, x, law, u, frozen_value);
            },
            [beta, frozen_value](double t, double x, const LawView& law, double u) {
                return beta(t, x, law, u, frozen_value);
            },
            [gamma, frozen_value](double t, const LawView& law, double u, double zeta) {
                return gamma(t, law, u, frozen_value, zeta);
            });
    }
    return CoefficientModel(
        [alpha, frozen_value](double t, double x, const LawView& law, double u) {
            return alpha(t, x, law, frozen_value, u);
        },
        [beta, frozen_value](double t, double x, const LawView& law, double u) {
            return beta(t, x, law, frozen_value, u);
        },
        [gamma, frozen_value](double t, const LawView& law, double u, double zeta) {
            return gamma(t, law, frozen_value, u, zeta);
        });
}

double game_generator_apply(const CylindricalValueFunction& phi, const GameCoefficientModel& game,
                            const JumpMeasure& nu, double s, double x, const GridDensity& m,
                            double u1, double u2) {
    const CoefficientModel frozen = fix_control(game, 2, u2);
    return generator_apply(phi, frozen, nu, s, x, m, u1);
}

namespace {

json point_json(const HjbPoint& p) {
    return {{"s", p.s}, {"x", p.x}, {"scenario", p.scenario}};
}

json condition_json(const GameConditionResult& c) {
    return {{"worst_value", c.worst_value},
            {"worst_point", point_json(c.worst)},
            {"worst_control", c.worst_control},
            {"pass", c.pass}};
}

// Sweeps the box once, calling visit(s, x, scenario, m, law, z).
template <class Visit>
void sweep_box(const EvalBox& box, const CylindricalValueFunction& phi, const Visit& visit) {
    for (std::size_t sc = 0; sc < box.scenarios.size(); ++sc) {
        const GridDensity& m = box.scenarios[sc];
        const LawView law(m);
        const auto z = phi.pairings(m);
        for (double s : box.s_values)
            for (double x : box.x_values) visit(s, x, sc, m, law, z);
    }
}

}  // namespace

std::string ZeroSumReport::to_json() const {
    json j;
    j["condition_i"] = condition_json(sup_u1);
    j["condition_ii"] = condition_json(inf_u2);
    j["condition_iii"] = condition_json(at_hat);
    j["terminal_mismatch"] = terminal_mismatch;
    j["tolerance"] = tolerance;
    j["pass"] = pass;
    return j.dump(2);
}

ZeroSumReport hjbi_zero_sum_check(const CylindricalValueFunction& phi, const GameRunningCost& cost,
                                  const GameCoefficientModel& game, const JumpMeasure& nu,
                                  const ControlGrid& u1_grid, const ControlGrid& u2_grid,
                                  const ControlPolicy& hat_u1, const ControlPolicy& hat_u2,
                                  const EvalBox& box, double tolerance) {
    if (u1_grid.empty() || u2_grid.empty())
        throw std::invalid_argument("hjbi_zero_sum_check: empty control grid");

    ZeroSumReport report;
    report.tolerance = tolerance;
    report.sup_u1.worst_value = -1e300;
    report.inf_u2.worst_value = 1e300;
    report.at_hat.worst_value = 0.0;

    sweep_box(box, phi, [&](double s, double x, std::size_t sc, const GridDensity& m,
                            const LawView& law, const std::vector<double>& z) {
        const double h1 = hat_u1(s, x, law);
        const double h2 = hat_u2(s, x, law);

        for (double u1 : u1_grid) {
            const double val = generator_core(phi, fix_control(game, 2, h2), nu, s, x, m, law, z,
                                              u1) +
                               cost.f(s, x, law, u1, h2);
            if (val > report.sup_u1.worst_value)
                report.sup_u1 = {val, {s, x, sc}, u1, false};
        }
        for (double u2 : u2_grid) {
            const double val = generator_core(phi, fix_control(game, 1, h1), nu, s, x, m, law, z,
                                              u2) +
                               cost.f(s, x, law, h1, u2);
            if (val < report.inf_u2.worst_value)
                report.inf_u2 = {val, {s, x, sc}, u2, false};
        }
        const double at_hat = generator_core(phi, fix_control(game, 2, h2), nu, s, x, m, law, z,
                                             h1) +
                              cost.f(s, x, law, h1, h2);
        if (std::abs(at_hat) > std::abs(report.at_hat.worst_value))
            report.at_hat = {at_hat, {s, x, sc}, h1, false};

        const double mismatch = std::abs(phi.value(box.terminal_time, x, z) - cost.g(x, law));
        if (mismatch > report.terminal_mismatch) report.terminal_mismatch = mismatch;
    });

    report.sup_u1.pass = report.sup_u1.worst_value <= tolerance;
    report.inf_u2.pass = report.inf_u2.worst_value >= -tolerance;
    report.at_hat.pass = std::abs(report.at_hat.worst_value) <= tolerance;
    const bool terminal_ok = report.terminal_mismatch <= tolerance;
    report.pass = report.sup_u1.pass && report.inf_u2.pass && report.at_hat.pass && terminal_ok;
    return report;
}

std::string NashReport::to_json() const {
    const auto player_json = [](const NashPlayerResult& p) {
        return json{{"max_deviation_gain", p.max_deviation_gain},
                    {"equation_residual", p.equation_residual},
                    {"terminal_mismatch", p.terminal_mismatch},
                    {"worst_point", point_json(p.worst)},
                    {"pass", p.pass}};
    };
    json j;
    j["player1"] = player_json(player1);
    j["player2"] = player_json(player2);
    j["tolerance"] = tolerance;
    j["pass"] = pass;
    return j.dump(2);
}

NashReport nash_check(const CylindricalValueFunction& phi1, const CylindricalValueFunction& phi2,
                      const GameRunningCost& cost1, const GameRunningCost& cost2,
                      const GameCoefficientModel& game, const JumpMeasure& nu,
                      const ControlGrid& u1_grid, const ControlGrid& u2_grid,
                      const ControlPolicy& hat_u1, const ControlPolicy& hat_u2,
                      const EvalBox& box, double tolerance) {
    NashReport report;
    report.tolerance = tolerance;

    const auto run_player = [&](int player) {
        const CylindricalValueFunction& phi = player == 1 ? phi1 : phi2;
        const GameRunningCost& cost = player == 1 ? cost1 : cost2;
        const ControlGrid& grid = player == 1 ? u1_grid : u2_grid;
        NashPlayerResult result;
        result.max_deviation_gain = -1e300;

        sweep_box(box, phi, [&](double s, double x, std::size_t sc, const GridDensity& m,
                                const LawView& law, const std::vector<double>& z) {
            const double h1 = hat_u1(s, x, law);
            const double h2 = hat_u2(s, x, law);
            const double other_hat = player == 1 ? h2 : h1;
            const double own_hat = player == 1 ? h1 : h2;
            const CoefficientModel frozen = fix_control(game, player == 1 ? 2 : 1, other_hat);
            const auto f_of = [&](double own) {
                return player == 1 ? cost.f(s, x, law, own, other_hat)
                                   : cost.f(s, x, law, other_hat, own);
            };

            const double base =
                generator_core(phi, frozen, nu, s, x, m, law, z, own_hat) + f_of(own_hat);
            if (std::abs(base) > result.equation_residual) result.equation_residual = std::abs(base);
            for (double u : grid) {
                const double val = generator_core(phi, frozen, nu, s, x, m, law, z, u) + f_of(u);
                if (val - base > result.max_deviation_gain) {
                    result.max_deviation_gain = val - base;
                    result.worst = {s, x, sc};
                }
            }
            const double mismatch = std::abs(phi.value(box.terminal_time, x, z) - cost.g(x, law));
            if (mismatch > result.terminal_mismatch) result.terminal_mismatch = mismatch;
        });

        result.pass = result.max_deviation_gain <= tolerance &&
                      result.equation_residual <= tolerance &&
                      result.terminal_mismatch <= tolerance;
        return result;
    };

    report.player1 = run_player(1);
    report.player2 = run_player(2);
    report.pass = report.player1.pass && report.player2.pass;
    return report;
}

}  // namespace mvjump
