#include "mvjump/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mvjump/closed_forms.hpp"
#include "mvjump/csv.hpp"
#include "mvjump/dynamics.hpp"
#include "mvjump/fokker_planck.hpp"
#include "mvjump/hjb.hpp"
#include "mvjump/jumps.hpp"
#include "mvjump/measures.hpp"

namespace mvjump {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const json& require(const json& j, const std::string& field, const std::string& where) {
    auto it = j.find(field);
    if (it == j.end())
        throw std::runtime_error("config: missing field '" + field + "' in " + where);
    return *it;
}

double require_number(const json& j, const std::string& field, const std::string& where) {
    const json& v = require(j, field, where);
    if (!v.is_number())
        throw std::runtime_error("config: field '" + field + "' in " + where + " must be a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& field, double fallback) {
    auto it = j.find(field);
    return it == j.end() ? fallback : it->get<double>();
}

JumpMeasure parse_jumps(const json& root) {
    const json& jumps = require(root, "jumps", "config");
    const json& atoms = require(jumps, "atoms", "'jumps'");
    if (!atoms.is_array()) throw std::runtime_error("config: 'atoms' must be an array");
    std::vector<JumpAtom> parsed;
    parsed.reserve(atoms.size());
    for (const auto& a : atoms)
        parsed.push_back({require_number(a, "zeta", "'atoms' entry"),
                          require_number(a, "intensity", "'atoms' entry")});
    return JumpMeasure(std::move(parsed));
}

GridSpec parse_grid(const json& root) {
    const json& g = require(root, "grid", "config");
    return GridSpec(require_number(g, "x_min", "'grid'"), require_number(g, "x_max", "'grid'"),
                    require_number(g, "dx", "'grid'"));
}

// Named coefficient presets; configs stay declarative, no expression parsing.
CoefficientModel::StateCoefficient parse_state_coefficient(const json& j, const std::string& name) {
    const std::string preset = require(j, "preset", "'" + name + "'").get<std::string>();
    if (preset == "zero")
        return [](double, double, const LawView&, double) { return 0.0; };
    if (preset == "constant") {
        const double value = require_number(j, "value", "'" + name + "'");
        return [value](double, double, const LawView&, double) { return value; };
    }
    if (preset == "linear") {
        const double slope = require_number(j, "slope", "'" + name + "'");
        const double intercept = number_or(j, "intercept", 0.0);
        return [slope, intercept](double, double x, const LawView&, double) {
            return slope * x + intercept;
        };
    }
    if (preset == "mean_field") {
        const double coef = require_number(j, "coef", "'" + name + "'");
        return [coef](double, double, const LawView& law, double) { return coef * law.mean(); };
    }
    if (preset == "control")
        return [](double, double, const LawView&, double u) { return u; };
    if (preset == "consumption") {
        const double rho = number_or(j, "rho", 0.0);
        return [rho](double, double, const LawView& law, double u) {
            return (rho - u) * law.mean();
        };
    }
    throw std::runtime_error("config: unknown preset '" + preset + "' for '" + name + "'");
}

CoefficientModel::JumpCoefficient parse_jump_coefficient(const json& j) {
    const std::string preset = require(j, "preset", "'gamma'").get<std::string>();
    if (preset == "zero") return [](double, const LawView&, double, double) { return 0.0; };
    if (preset == "constant") {
        const double value = require_number(j, "value", "'gamma'");
        return [value](double, const LawView&, double, double) { return value; };
    }
    if (preset == "scaled_mark") {
        const double scale = require_number(j, "scale", "'gamma'");
        return [scale](double, const LawView&, double, double zeta) { return scale * zeta; };
    }
    if (preset == "mean_field_mark") {
        const double scale = require_number(j, "scale", "'gamma'");
        return [scale](double, const LawView& law, double, double zeta) {
            return scale * zeta * law.mean();
        };
    }
    throw std::runtime_error("config: unknown preset '" + preset + "' for 'gamma'");
}

CoefficientModel parse_model(const json& root) {
    const json& m = require(root, "model", "config");
    return CoefficientModel(parse_state_coefficient(require(m, "alpha", "'model'"), "alpha"),
                            parse_state_coefficient(require(m, "beta", "'model'"), "beta"),
                            parse_jump_coefficient(require(m, "gamma", "'model'")));
}

ControlPolicy parse_control(const json& root, double T) {
    auto it = root.find("control");
    if (it == root.end()) return ControlPolicy::zero();
    const json& c = *it;
    const std::string preset = require(c, "preset", "'control'").get<std::string>();
    if (preset == "none") return ControlPolicy::zero();
    if (preset == "constant") return ControlPolicy::constant(require_number(c, "value", "'control'"));
    if (preset == "lq_feedback") {
        const double sigma = require_number(c, "sigma", "'control'");
        const double jm = number_or(c, "jump_second_moment", 0.0);
        const double rdt = number_or(c, "riccati_dt", 1e-4);
        return lq_feedback(riccati_solve(sigma, jm, T, rdt));
    }
    if (preset == "consumption") {
        const double theta = require_number(c, "theta", "'control'");
        const double rho = number_or(c, "rho", 0.0);
        return consumption_policy(
            consumption_solution(theta, T, [rho](double) { return rho; }, 1e-4));
    }
    throw std::runtime_error("config: unknown preset '" + preset + "' for 'control'");
}

struct Horizon {
    double T;
    double dt;
};

Horizon parse_horizon(const json& root) {
    const json& h = require(root, "horizon", "config");
    return {require_number(h, "T", "'horizon'"), require_number(h, "dt", "'horizon'")};
}

std::vector<double> parse_initial_positions(const json& root, std::uint64_t seed) {
    const json& p = require(root, "particles", "config");
    const auto n = static_cast<std::size_t>(require_number(p, "N", "'particles'"));
    const json& init = require(p, "init", "'particles'");
    const std::string kind = require(init, "kind", "'init'").get<std::string>();
    if (kind == "point")
        return std::vector<double>(n, require_number(init, "x0", "'init'"));
    if (kind == "normal")
        return normal_initial_positions(require_number(init, "mean", "'init'"),
                                        require_number(init, "stddev", "'init'"), n, seed);
    throw std::runtime_error("config: unknown init kind '" + kind + "'");
}

GridDensity parse_density(const json& j, const GridSpec& grid, const std::string& where) {
    const std::string kind = require(j, "kind", where).get<std::string>();
    if (kind == "normal")
        return GridDensity::normal(grid, require_number(j, "mean", where),
                                   require_number(j, "stddev", where),
                                   number_or(j, "tol_mass", 1e-3));
    if (kind == "uniform") return GridDensity::uniform(grid, number_or(j, "tol_mass", 1e-3));
    throw std::runtime_error("config: unknown density kind '" + kind + "' in " + where);
}

EvalBox parse_box(const json& root, const GridSpec& grid, double T) {
    const json& b = require(root, "box", "config");
    EvalBox box;
    box.terminal_time = T;
    const auto fill = [](const json& axis, const std::string& where) {
        const double lo = require_number(axis, "min", where);
        const double hi = require_number(axis, "max", where);
        const auto count = static_cast<std::size_t>(number_or(axis, "count", 11));
        std::vector<double> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(count == 1 ? lo
                                     : lo + (hi - lo) * static_cast<double>(i) /
                                                static_cast<double>(count - 1));
        return out;
    };
    box.s_values = fill(require(b, "s", "'box'"), "'box.s'");
    box.x_values = fill(require(b, "x", "'box'"), "'box.x'");
    const json& scenarios = require(b, "scenarios", "'box'");
    for (const auto& sc : scenarios) box.scenarios.push_back(parse_density(sc, grid, "'scenarios'"));
    return box;
}

ControlGrid parse_control_grid(const json& j, const std::string& where) {
    return make_control_grid(require_number(j, "u_min", where), require_number(j, "u_max", where),
                             require_number(j, "du", where));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text << '\n';
}

// ---------------------------------------------------------------------------
// Scenario kinds
// ---------------------------------------------------------------------------

bool run_simulate(const json& cfg, const fs::path& out, std::uint64_t seed) {
    const Horizon h = parse_horizon(cfg);
    const auto model = parse_model(cfg);
    const auto nu = parse_jumps(cfg);
    const auto policy = parse_control(cfg, h.T);
    auto init = parse_initial_positions(cfg, seed);
    const auto sim = simulate_particles_from(model, policy, nu, std::move(init), h.dt, h.T, seed);
    sim.to_csv((out / "simulation.csv").string());
    if (cfg.value("dump_final_ensemble", false))
        sim.final().to_csv((out / "ensemble_final.csv").string());
    return true;
}

struct FpRun {
    FpSolution solution;
    json report;
    bool pass;
};

FpRun run_fp_core(const json& cfg, std::uint64_t /*seed*/) {
    const Horizon h = parse_horizon(cfg);
    const GridSpec grid = parse_grid(cfg);
    const auto model = parse_model(cfg);
    const auto nu = parse_jumps(cfg);
    const auto policy = parse_control(cfg, h.T);
    const auto m0 = parse_density(require(cfg, "initial_density", "config"), grid,
                                  "'initial_density'");
    const json tol = cfg.value("tolerances", json::object());

    FpOptions options;
    options.mass_drift_tol = tol.value("mass_drift", 1e-2);
    options.negative_tol = tol.value("negative", 1e-8);
    const auto steps = static_cast<std::size_t>(std::llround(h.T / h.dt));
    options.store_stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.value("output_stride", 0.0)) > 0
               ? static_cast<std::size_t>(cfg["output_stride"].get<double>())
               : steps / 20 + 1);

    FpRun run{solve_fp(model, nu, m0, policy, h.dt, h.T, options), json::object(), true};

    run.report["scenario"] = cfg.value("name", std::string("solve_fp"));
    run.report["dx"] = grid.dx;
    run.report["dt"] = h.dt;
    run.report["mass_drift"] = run.solution.mass_drift_max();
    if (cfg.contains("reference")) {
        const auto ref = parse_density(cfg["reference"], grid, "'reference'");
        const auto mT = run.solution.final_density();
        double l1 = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double term = std::abs(mT.values()[i] - ref.values()[i]);
            if (i == 0 || i + 1 == grid.size()) term *= 0.5;
            l1 += term;
        }
        l1 *= grid.dx;
        run.report["l1_error"] = l1;
        const double l1_tol = tol.value("l1_error", 1e-2);
        const double drift_tol = tol.value("mass_drift_report", 1e-3);
        run.pass = l1 <= l1_tol && run.solution.mass_drift_max() <= drift_tol;
    }
    run.report["pass"] = run.pass;
    return run;
}

bool run_solve_fp(const json& cfg, const fs::path& out, std::uint64_t seed) {
    auto run = run_fp_core(cfg, seed);
    run.solution.to_csv((out / "fp_solution.csv").string());
    write_text(out / "fp_report.json", run.report.dump(2));
    return run.pass;
}

bool run_feynman_kac(const json& cfg, const fs::path& out, std::uint64_t seed) {
    auto run = run_fp_core(cfg, seed);
    const auto model = parse_model(cfg);
    const auto nu = parse_jumps(cfg);
    const Horizon h = parse_horizon(cfg);
    const auto traj = run.solution.law_trajectory();
    const auto m0 = parse_density(require(cfg, "initial_density", "config"), parse_grid(cfg),
                                  "'initial_density'");
    const auto mT = run.solution.final_density();

    const json& probes = require(cfg, "probes", "config");
    const auto paths = static_cast<std::size_t>(number_or(cfg, "paths", 10000));
    const double slack = cfg.value("tolerances", json::object()).value("cross_solver", 1e-2);

    bool pass = true;
    double worst = 0.0;
    std::vector<std::vector<double>> rows;
    for (const auto& p : probes) {
        const double x = p.get<double>();
        const auto fk = feynman_kac_density(model, nu, m0, traj, x, h.T, paths, seed);
        const double fp_value = mT.value_at(x);
        const double diff = std::abs(fk.estimate - fp_value);
        const double band = 3.0 * fk.std_error + slack;
        pass = pass && diff <= band;
        worst = std::max(worst, diff - band);
        rows.push_back({x, fk.estimate, fk.std_error, fp_value, diff, band});
    }
    csv::write((out / "feynman_kac.csv").string(),
               {"x", "estimate", "std_error", "fp_value", "abs_diff", "band"}, rows);
    json report;
    report["scenario"] = cfg.value("name", std::string("feynman_kac"));
    report["paths"] = paths;
    report["worst_excess"] = worst;
    report["pass"] = pass;
    write_text(out / "fk_report.json", report.dump(2));
    return pass;
}

bool run_check_characteristic(const json& cfg, const fs::path& out, std::uint64_t seed) {
    const Horizon h = parse_horizon(cfg);
    const auto model = parse_model(cfg);
    const auto nu = parse_jumps(cfg);
    const auto policy = parse_control(cfg, h.T);
    auto init = parse_initial_positions(cfg, seed);
    const auto sim = simulate_particles_from(model, policy, nu, std::move(init), h.dt, h.T, seed);

    const json& check = require(cfg, "check", "config");
    const double y_min = require_number(check, "y_min", "'check'");
    const double y_max = require_number(check, "y_max", "'check'");
    const double y_step = require_number(check, "y_step", "'check'");
    const double window = require_number(check, "h", "'check'");
    const double slack = number_or(check, "slack", 0.05);
    std::vector<double> ys;
    for (double y = y_min; y <= y_max + 1e-12; y += y_step) ys.push_back(y);
    std::vector<double> times;
    for (const auto& t : require(check, "times", "'check'")) times.push_back(t.get<double>());

    const auto report = check_characteristic_evolution(sim, model, nu, ys, window, times);
    report.to_csv((out / "characteristic.csv").string());
    const double excess = report.worst_excess(slack);
    const bool pass = excess <= 0.0;
    json jr;
    jr["scenario"] = cfg.value("name", std::string("check_characteristic"));
    jr["max_discrepancy"] = report.max_discrepancy;
    jr["worst_excess"] = excess;
    jr["slack"] = slack;
    jr["pass"] = pass;
    write_text(out / "characteristic_report.json", jr.dump(2));
    return pass;
}

struct HjbCandidate {
    CylindricalValueFunction phi;
    CoefficientModel model;
    RunningCost cost;
    std::optional<RiccatiCurves> curves;
};

HjbCandidate parse_hjb_candidate(const json& cfg, double T) {
    const json& cand = require(cfg, "candidate", "config");
    const std::string kind = require(cand, "kind", "'candidate'").get<std::string>();
    if (kind == "lq") {
        const double sigma = require_number(cand, "sigma", "'candidate'");
        const double jm = number_or(cand, "jump_second_moment", 0.0);
        const double rdt = number_or(cand, "riccati_dt", 1e-4);
        const double gamma0_scale = number_or(cand, "gamma0_scale", 0.0);
        const double k1_scale = number_or(cand, "kappa1_scale", 1.0);
        auto curves = riccati_solve(sigma, jm, T, rdt);
        if (k1_scale != 1.0)
            for (auto& v : curves.k1) v *= k1_scale;
        return {lq_value(curves), lq_model(sigma, gamma0_scale), lq_running_cost(), curves};
    }
    if (kind == "consumption") {
        const double theta = require_number(cand, "theta", "'candidate'");
        const double rho = number_or(cand, "rho", 0.0);
        const double quad_dt = number_or(cand, "quad_dt", 1e-4);
        const double sigma0 = number_or(cand, "sigma0", 0.0);
        const auto sol = consumption_solution(theta, T, [rho](double) { return rho; }, quad_dt);
        auto value = [sol](double s, double, std::span<const double> z) {
            return sol.kappa0(s) + sol.kappa1(s) * std::log(z[0]);
        };
        auto ds = [sol](double s, double, std::span<const double> z) {
            // kappa0' = 1 + ln k1 - rho k1, kappa1' = -1.
            return 1.0 + std::log(sol.kappa1(s)) - sol.rho(s) * sol.kappa1(s) - std::log(z[0]);
        };
        auto zero2 = [](double, double, std::span<const double>) { return 0.0; };
        auto dz = [sol](double s, double, std::span<const double> z, std::size_t) {
            return sol.kappa1(s) / z[0];
        };
        CylindricalValueFunction phi({TestPolynomial::identity()}, std::move(value), std::move(ds),
                                     zero2, zero2, std::move(dz));
        return {std::move(phi),
                consumption_model([rho](double) { return rho; }, sigma0),
                consumption_running_cost(theta),
                std::nullopt};
    }
    throw std::runtime_error("config: unknown candidate kind '" + kind + "'");
}

bool run_verify_hjb(const json& cfg, const fs::path& out, std::uint64_t /*seed*/) {
    const Horizon h = parse_horizon(cfg);
    const GridSpec grid = parse_grid(cfg);
    const auto nu = parse_jumps(cfg);
    auto candidate = parse_hjb_candidate(cfg, h.T);
    const auto box = parse_box(cfg, grid, h.T);
    const auto controls = parse_control_grid(require(cfg, "controls", "config"), "'controls'");
    const double tol = cfg.value("tolerances", json::object()).value("residual", 1e-3);

    const auto report = hjb_residual(candidate.phi, candidate.cost, candidate.model, nu, controls,
                                     box, tol);
    if (candidate.curves) candidate.curves->to_csv((out / "riccati.csv").string());
    write_text(out / "hjb_report.json", report.to_json());
    return report.pass;
}

// The closed-form zero-sum toy: alpha = u1 - u2, f = -u1^2/2 + u2^2/2 + (u1-u2)x,
// g = 0, phi = 0, hat_u1 = hat_u2 = x. Conditions (i)-(iii) hold exactly.
bool run_verify_hjbi(const json& cfg, const fs::path& out, std::uint64_t /*seed*/) {
    const Horizon h = parse_horizon(cfg);
    const GridSpec grid = parse_grid(cfg);
    const auto box = parse_box(cfg, grid, h.T);
    const auto u1_grid = parse_control_grid(require(cfg, "controls", "config"), "'controls'");
    const auto u2_grid = u1_grid;
    const double tol = cfg.value("tolerances", json::object()).value("residual", 1e-3);
    const double perturb = cfg.value("perturb_u1", 0.0);

    GameCoefficientModel game{
        [](double, double, const LawView&, double u1, double u2) { return u1 - u2; },
        [](double, double, const LawView&, double, double) { return 0.0; },
        [](double, const LawView&, double, double, double) { return 0.0; }};
    GameRunningCost cost{
        [](double, double x, const LawView&, double u1, double u2) {
            return -0.5 * u1 * u1 + 0.5 * u2 * u2 + (u1 - u2) * x;
        },
        [](double, const LawView&) { return 0.0; }};
    auto zero3 = [](double, double, std::span<const double>) { return 0.0; };
    auto zero4 = [](double, double, std::span<const double>, std::size_t) { return 0.0; };
    CylindricalValueFunction phi({}, zero3, zero3, zero3, zero3, zero4);
    ControlPolicy hat1([perturb](double, double x, const LawView&) { return x + perturb; }, -1e9,
                       1e9);
    ControlPolicy hat2([](double, double x, const LawView&) { return x; }, -1e9, 1e9);

    const auto report = hjbi_zero_sum_check(phi, cost, game, JumpMeasure(), u1_grid, u2_grid, hat1,
                                            hat2, box, tol);
    write_text(out / "hjbi_report.json", report.to_json());
    return report.pass;
}

// Decoupled two-player game: player 1 runs the LQ problem (alpha = u1), player
// 2 tracks a target rate with state-free cost; the Nash check then reduces to
// two independent single-player checks.
bool run_verify_nash(const json& cfg, const fs::path& out, std::uint64_t /*seed*/) {
    const Horizon h = parse_horizon(cfg);
    const GridSpec grid = parse_grid(cfg);
    const auto box = parse_box(cfg, grid, h.T);
    const json& controls = require(cfg, "controls", "config");
    const auto u1_grid = parse_control_grid(require(controls, "u1", "'controls'"), "'controls.u1'");
    const auto u2_grid = parse_control_grid(require(controls, "u2", "'controls'"), "'controls.u2'");
    const double tol = cfg.value("tolerances", json::object()).value("residual", 1e-3);
    const double sigma = cfg.value("sigma", 0.3);
    const double target = cfg.value("player2_target", 0.25);
    const double rdt = cfg.value("riccati_dt", 1e-4);
    const double perturb1 = cfg.value("perturb_kappa1", 1.0);
    const double perturb2 = cfg.value("perturb_u2", 0.0);

    auto curves = riccati_solve(sigma, 0.0, h.T, rdt);
    if (perturb1 != 1.0)
        for (auto& v : curves.k1) v *= perturb1;

    GameCoefficientModel game{
        [](double, double, const LawView&, double u1, double) { return u1; },
        [sigma](double, double, const LawView& law, double, double) { return sigma * law.mean(); },
        [](double, const LawView&, double, double, double) { return 0.0; }};
    GameRunningCost cost1{
        [](double, double, const LawView&, double u1, double) { return -0.5 * u1 * u1; },
        [](double x, const LawView&) { return -0.5 * x * x; }};
    GameRunningCost cost2{
        [target](double, double, const LawView&, double, double u2) {
            return -(u2 - target) * (u2 - target);
        },
        [](double, const LawView&) { return 0.0; }};

    auto zero3 = [](double, double, std::span<const double>) { return 0.0; };
    auto zero4 = [](double, double, std::span<const double>, std::size_t) { return 0.0; };
    CylindricalValueFunction phi2({}, zero3, zero3, zero3, zero3, zero4);
    const auto phi1 = lq_value(curves);
    const auto hat1 = lq_feedback(curves);
    ControlPolicy hat2([target, perturb2](double, double, const LawView&) {
        return target + perturb2;
    }, -1e9, 1e9);

    const auto report = nash_check(phi1, phi2, cost1, cost2, game, JumpMeasure(), u1_grid, u2_grid,
                                   hat1, hat2, box, tol);
    write_text(out / "nash_report.json", report.to_json());
    return report.pass;
}

bool run_lq_benchmark(const json& cfg, const fs::path& out, std::uint64_t seed) {
    const Horizon h = parse_horizon(cfg);
    const GridSpec grid = parse_grid(cfg);
    const auto nu = parse_jumps(cfg);
    const double sigma = require_number(cfg, "sigma", "config");
    const double gamma0_scale = cfg.value("gamma0_scale", 0.0);
    const double rdt = cfg.value("riccati_dt", 1e-4);
    const double tol = cfg.value("tolerances", json::object()).value("residual", 1e-3);

    // int gamma0^2 dnu with gamma0(zeta) = gamma0_scale * zeta.
    const double jump_moment =
        gamma0_scale * gamma0_scale *
        nu_integral(nu, [](double zeta) { return zeta * zeta; });
    const auto curves = riccati_solve(sigma, jump_moment, h.T, rdt);
    curves.to_csv((out / "riccati.csv").string());

    const auto box = parse_box(cfg, grid, h.T);
    const auto controls = parse_control_grid(require(cfg, "controls", "config"), "'controls'");
    const auto report = hjb_residual(lq_value(curves), lq_running_cost(),
                                     lq_model(sigma, gamma0_scale), nu, controls, box, tol);
    write_text(out / "hjb_report.json", report.to_json());
    bool pass = report.pass;

    if (cfg.contains("simulation")) {
        const json& sim = cfg["simulation"];
        const auto N = static_cast<std::size_t>(require_number(sim, "N", "'simulation'"));
        const double dt = require_number(sim, "dt", "'simulation'");
        const double x0 = number_or(sim, "x0", 1.0);
        const auto replicates = static_cast<std::size_t>(number_or(sim, "replicates", 8));
        const auto policy = lq_feedback(curves);
        const auto model = lq_model(sigma, gamma0_scale);
        const auto cost = lq_running_cost();
        const auto base = estimate_performance(model, policy, nu, cost, x0, N, dt, h.T, seed,
                                               replicates);
        const double value = curves.k1_at(0.0) * x0 * x0 + curves.k2_at(0.0) * x0 * x0 +
                             curves.k3_at(0.0) * x0 * x0;
        std::vector<std::vector<double>> rows{{0.0, base.estimate, base.std_error}};
        pass = pass && std::abs(base.estimate - value) <= 3.0 * base.std_error + 5.0 * dt;
        for (const auto& d : sim.value("deltas", json::array())) {
            const double delta = d.get<double>();
            ControlPolicy shifted(
                [&policy, delta](double t, double x, const LawView& law) {
                    return policy(t, x, law) + delta;
                },
                -1e9, 1e9);
            const auto perturbed = estimate_performance(model, shifted, nu, cost, x0, N, dt, h.T,
                                                        seed, replicates);
            double var_diff = 0.0, mean_diff = 0.0;
            for (std::size_t r = 0; r < replicates; ++r)
                mean_diff += base.replicate_values[r] - perturbed.replicate_values[r];
            mean_diff /= static_cast<double>(replicates);
            for (std::size_t r = 0; r < replicates; ++r) {
                const double d2 = base.replicate_values[r] - perturbed.replicate_values[r] -
                                  mean_diff;
                var_diff += d2 * d2;
            }
            const double se_diff = replicates > 1
                                       ? std::sqrt(var_diff / static_cast<double>(replicates - 1) /
                                                   static_cast<double>(replicates))
                                       : 0.0;
            pass = pass && mean_diff >= -3.0 * se_diff;
            rows.push_back({delta, perturbed.estimate, perturbed.std_error});
        }
        csv::write((out / "performance.csv").string(), {"delta", "J", "std_error"}, rows);
    }
    return pass;
}

bool run_consumption_benchmark(const json& cfg, const fs::path& out, std::uint64_t /*seed*/) {
    const double theta = require_number(cfg, "theta", "config");
    const double T = require_number(cfg, "T", "config");
    const double rho = cfg.value("rho", 0.0);
    const double x0 = cfg.value("x0", 1.0);
    const double quad_dt = cfg.value("quad_dt", 1e-4);
    const json tol = cfg.value("tolerances", json::object());

    const auto sol = consumption_solution(theta, T, [rho](double) { return rho; }, quad_dt);
    sol.to_csv((out / "consumption.csv").string());
    const auto eval = consumption_value_and_objective(sol, x0, quad_dt);
    const double diff = std::abs(eval.objective - eval.value);
    bool pass = diff <= tol.value("objective", 1e-6);

    json report;
    report["kappa1_0"] = sol.kappa1(0.0);
    report["c_hat_0"] = sol.c_hat(0.0);
    report["kappa0_0"] = sol.kappa0(0.0);
    report["value"] = eval.value;
    report["objective"] = eval.objective;
    report["value_objective_gap"] = diff;
    json perturbed = json::array();
    for (const auto& factor_json : cfg.value("perturbations", json::array({0.8, 1.2}))) {
        const double factor = factor_json.get<double>();
        const double j_perturbed = consumption_objective(
            sol, [&sol, factor](double t) { return factor * sol.c_hat(t); }, x0, quad_dt);
        pass = pass && j_perturbed < eval.objective;
        perturbed.push_back({{"factor", factor}, {"objective", j_perturbed}});
    }
    report["perturbed"] = perturbed;
    report["pass"] = pass;
    write_text(out / "consumption_report.json", report.dump(2));
    return pass;
}

}  // namespace

ScenarioOutcome run_scenario(const std::string& config_path, const std::string& out_dir,
                             std::optional<std::uint64_t> seed_override, bool quiet) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw std::runtime_error("config: parse error in '" + config_path + "': " + e.what());
    }

    ScenarioOutcome outcome;
    outcome.kind = require(cfg, "kind", "config").get<std::string>();
    outcome.seed = seed_override.value_or(
        cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0);
    std::printf("seed: %llu\n", static_cast<unsigned long long>(outcome.seed));

    const fs::path out(out_dir);
    fs::create_directories(out);

    if (outcome.kind == "simulate")
        outcome.pass = run_simulate(cfg, out, outcome.seed);
    else if (outcome.kind == "solve_fp")
        outcome.pass = run_solve_fp(cfg, out, outcome.seed);
    else if (outcome.kind == "feynman_kac")
        outcome.pass = run_feynman_kac(cfg, out, outcome.seed);
    else if (outcome.kind == "check_characteristic")
        outcome.pass = run_check_characteristic(cfg, out, outcome.seed);
    else if (outcome.kind == "verify_hjb")
        outcome.pass = run_verify_hjb(cfg, out, outcome.seed);
    else if (outcome.kind == "verify_hjbi")
        outcome.pass = run_verify_hjbi(cfg, out, outcome.seed);
    else if (outcome.kind == "verify_nash")
        outcome.pass = run_verify_nash(cfg, out, outcome.seed);
    else if (outcome.kind == "lq_benchmark")
        outcome.pass = run_lq_benchmark(cfg, out, outcome.seed);
    else if (outcome.kind == "consumption_benchmark")
        outcome.pass = run_consumption_benchmark(cfg, out, outcome.seed);
    else
        throw std::runtime_error("config: unknown scenario kind '" + outcome.kind + "'");

    outcome.message = outcome.kind + (outcome.pass ? ": pass" : ": FAIL");
    if (!quiet) std::printf("%s\n", outcome.message.c_str());
    return outcome;
}

CompareOutcome compare_dirs(const std::string& dir_a, const std::string& dir_b, double tolerance,
                            bool quiet) {
    CompareOutcome outcome;
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir_a))
        if (entry.path().extension() == ".csv") names.insert(entry.path().filename().string());
    if (names.empty()) {
        outcome.status = 1;
        outcome.message = "no CSV files in " + dir_a;
        return outcome;
    }

    double worst = 0.0;
    for (const auto& name : names) {
        const fs::path pa = fs::path(dir_a) / name;
        const fs::path pb = fs::path(dir_b) / name;
        if (!fs::exists(pb)) {
            outcome.status = 1;
            outcome.message = "missing file " + pb.string();
            return outcome;
        }
        const auto ta = csv::read(pa.string());
        const auto tb = csv::read(pb.string());
        if (ta.header != tb.header || ta.rows.size() != tb.rows.size()) {
            outcome.status = 1;
            outcome.message = "shape mismatch in " + name;
            return outcome;
        }
        std::vector<double> col_max(ta.header.size(), 0.0);
        for (std::size_t r = 0; r < ta.rows.size(); ++r) {
            if (ta.rows[r].size() != tb.rows[r].size()) {
                outcome.status = 1;
                outcome.message = "shape mismatch in " + name;
                return outcome;
            }
            for (std::size_t c = 0; c < ta.rows[r].size(); ++c)
                col_max[c] = std::max(col_max[c], std::abs(ta.rows[r][c] - tb.rows[r][c]));
        }
        for (std::size_t c = 0; c < col_max.size(); ++c) {
            worst = std::max(worst, col_max[c]);
            if (!quiet)
                std::printf("%s:%s max|delta| = %s\n", name.c_str(), ta.header[c].c_str(),
                            csv::format_double(col_max[c]).c_str());
        }
    }
    if (worst > tolerance) {
        outcome.status = 2;
        outcome.message = "max delta " + csv::format_double(worst) + " exceeds tolerance " +
                          csv::format_double(tolerance);
    } else {
        outcome.message = "all deltas within tolerance";
    }
    return outcome;
}

}  // namespace mvjump
