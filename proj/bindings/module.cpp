#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "mvjump/closed_forms.hpp"
#include "mvjump/dynamics.hpp"
#include "mvjump/fokker_planck.hpp"
#include "mvjump/hjb.hpp"
#include "mvjump/jumps.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/parallel.hpp"
#include "mvjump/rng.hpp"
#include "mvjump/scenario.hpp"

namespace py = pybind11;
using namespace mvjump;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Particle, Fokker-Planck and HJB-verification toolkit for "
              "law-dependent jump diffusions";

    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    // measures -----------------------------------------------------------
    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<double, double, double>(), py::arg("x_min"), py::arg("x_max"), py::arg("dx"))
        .def_readonly("x_min", &GridSpec::x_min)
        .def_readonly("x_max", &GridSpec::x_max)
        .def_readonly("dx", &GridSpec::dx)
        .def("__len__", &GridSpec::size)
        .def("x", &GridSpec::x);

    py::class_<TestPolynomial>(m, "TestPolynomial")
        .def(py::init<std::vector<double>>(), py::arg("coefficients"))
        .def_static("identity", &TestPolynomial::identity)
        .def_static("constant", &TestPolynomial::constant)
        .def("__call__", &TestPolynomial::operator())
        .def("derivative", &TestPolynomial::derivative)
        .def("shifted", &TestPolynomial::shifted)
        .def_property_readonly("coefficients", &TestPolynomial::coefficients);

    py::class_<GridDensity>(m, "GridDensity")
        .def(py::init<double, double, std::vector<double>, double>(), py::arg("x_min"),
             py::arg("dx"), py::arg("values"), py::arg("tol_mass") = 1e-3)
        .def_static("normal", &GridDensity::normal, py::arg("grid"), py::arg("mean"),
                    py::arg("stddev"), py::arg("tol_mass") = 1e-3)
        .def_static("uniform", &GridDensity::uniform, py::arg("grid"), py::arg("tol_mass") = 1e-3)
        .def_property_readonly("x_min", &GridDensity::x_min)
        .def_property_readonly("dx", &GridDensity::dx)
        .def_property_readonly("values",
                               [](const GridDensity& d) {
                                   return std::vector<double>(d.values().begin(), d.values().end());
                               })
        .def("value_at", &GridDensity::value_at)
        .def("trapezoid_mass", &GridDensity::trapezoid_mass)
        .def("k_weighted_norm", &GridDensity::k_weighted_norm)
        .def("to_csv", &GridDensity::to_csv)
        .def_static("from_csv", &GridDensity::from_csv, py::arg("path"), py::arg("tol_mass") = 1e-3)
        .def("__len__", &GridDensity::size);

    py::class_<EmpiricalEnsemble>(m, "EmpiricalEnsemble")
        .def(py::init<std::vector<double>>(), py::arg("positions"))
        .def_property_readonly("positions",
                               [](const EmpiricalEnsemble& e) {
                                   return std::vector<double>(e.positions().begin(),
                                                              e.positions().end());
                               })
        .def("mean", &EmpiricalEnsemble::mean)
        .def("second_moment", &EmpiricalEnsemble::second_moment)
        .def("to_csv", &EmpiricalEnsemble::to_csv)
        .def("__len__", &EmpiricalEnsemble::size);

    py::class_<LawView>(m, "LawView")
        .def(py::init<const GridDensity&>())
        .def(py::init<const EmpiricalEnsemble&>())
        .def("pairing", &LawView::pairing)
        .def("mean", &LawView::mean)
        .def("raw_moment", &LawView::raw_moment);

    m.def("pairing",
          py::overload_cast<const GridDensity&, const TestPolynomial&>(&pairing),
          py::arg("density"), py::arg("q"));
    m.def("pairing",
          py::overload_cast<const EmpiricalEnsemble&, const TestPolynomial&>(&pairing),
          py::arg("ensemble"), py::arg("q"));
    m.def(
        "gamma_shift",
        [](const GridDensity& density, double gamma) {
            auto shifted = gamma_shift(density, gamma);
            return py::make_tuple(shifted.density, shifted.boundary_mass_lost);
        },
        py::arg("density"), py::arg("gamma"),
        "Returns (shifted_density, boundary_mass_lost).");
    m.def("characteristic_function", &characteristic_function, py::arg("ensemble"), py::arg("y"));
    m.def("density_from_ensemble", &density_from_ensemble, py::arg("ensemble"), py::arg("grid"),
          py::arg("bandwidth"));
    m.def("silverman_bandwidth", &silverman_bandwidth);

    // jumps ----------------------------------------------------------------
    py::class_<JumpMeasure>(m, "JumpMeasure")
        .def(py::init([](const std::vector<std::pair<double, double>>& atoms) {
                 std::vector<JumpAtom> parsed;
                 parsed.reserve(atoms.size());
                 for (const auto& [zeta, intensity] : atoms) parsed.push_back({zeta, intensity});
                 return JumpMeasure(std::move(parsed));
             }),
             py::arg("atoms"), "atoms: list of (zeta, intensity) pairs")
        .def_property_readonly("total_intensity", &JumpMeasure::total_intensity)
        .def_property_readonly("second_moment", &JumpMeasure::second_moment);

    m.def(
        "nu_integral",
        [](const JumpMeasure& nu, const std::function<double(double)>& f) {
            return nu_integral(nu, f);
        },
        py::arg("nu"), py::arg("f"));
    m.def(
        "sample_jump_marks",
        [](const JumpMeasure& nu, double dt, std::uint64_t seed) {
            RngStream rng(seed, 0);
            return sample_jump_marks(nu, dt, rng);
        },
        py::arg("nu"), py::arg("dt"), py::arg("seed"));

    // dynamics ---------------------------------------------------------------
    py::class_<CoefficientModel>(m, "CoefficientModel")
        .def(py::init<CoefficientModel::StateCoefficient, CoefficientModel::StateCoefficient,
                      CoefficientModel::JumpCoefficient>(),
             py::arg("alpha"), py::arg("beta"), py::arg("gamma"),
             "alpha, beta: (t, x, law, u) -> float; gamma: (t, law, u, zeta) -> float")
        .def_static("zero", &CoefficientModel::zero)
        .def("alpha", &CoefficientModel::alpha)
        .def("beta", &CoefficientModel::beta)
        .def("gamma", &CoefficientModel::gamma);

    py::class_<ControlPolicy>(m, "ControlPolicy")
        .def(py::init<ControlPolicy::Evaluator, double, double>(), py::arg("evaluator"),
             py::arg("u_min"), py::arg("u_max"))
        .def_static("constant", &ControlPolicy::constant)
        .def_static("zero", &ControlPolicy::zero)
        .def("__call__", &ControlPolicy::operator());

    py::class_<LawTrajectory>(m, "LawTrajectory")
        .def_readonly("dt", &LawTrajectory::dt)
        .def("horizon", &LawTrajectory::horizon);

    py::class_<StepControlSummary>(m, "StepControlSummary")
        .def_readonly("mean", &StepControlSummary::mean)
        .def_readonly("min", &StepControlSummary::min)
        .def_readonly("max", &StepControlSummary::max);

    py::class_<SimulationResult>(m, "SimulationResult")
        .def_readonly("dt", &SimulationResult::dt)
        .def_readonly("times", &SimulationResult::times)
        .def_readonly("ensembles", &SimulationResult::ensembles)
        .def_readonly("controls", &SimulationResult::controls)
        .def("law_trajectory", &SimulationResult::law_trajectory)
        .def("to_csv", &SimulationResult::to_csv)
        .def_property_readonly("final", [](const SimulationResult& r) { return r.final(); });

    m.def("simulate_particles", &simulate_particles, py::arg("model"), py::arg("policy"),
          py::arg("nu"), py::arg("x0"), py::arg("N"), py::arg("dt"), py::arg("T"), py::arg("seed"));
    m.def("simulate_particles_from", &simulate_particles_from, py::arg("model"), py::arg("policy"),
          py::arg("nu"), py::arg("initial_positions"), py::arg("dt"), py::arg("T"),
          py::arg("seed"));
    m.def("normal_initial_positions", &normal_initial_positions, py::arg("mean"),
          py::arg("stddev"), py::arg("N"), py::arg("seed"), py::arg("stream_id") = 0);

    py::class_<AbcCoefficients>(m, "AbcCoefficients")
        .def_readonly("a", &AbcCoefficients::a)
        .def_readonly("b", &AbcCoefficients::b)
        .def_readonly("c", &AbcCoefficients::c);
    m.def("abc_coefficients", &abc_coefficients, py::arg("model"), py::arg("t"), py::arg("x"),
          py::arg("law"), py::arg("u") = 0.0, py::arg("h_x") = 1e-4);

    m.def(
        "feynman_kac_density",
        [](const CoefficientModel& model, const JumpMeasure& nu, const GridDensity& m0,
           const LawTrajectory& traj, double x, double t, std::size_t n_paths,
           std::uint64_t seed) {
            const auto est = feynman_kac_density(model, nu, m0, traj, x, t, n_paths, seed);
            return py::make_tuple(est.estimate, est.std_error);
        },
        py::arg("model"), py::arg("nu"), py::arg("m0"), py::arg("frozen_law"), py::arg("x"),
        py::arg("t"), py::arg("n_paths"), py::arg("seed"));

    // fokker_planck -------------------------------------------------------------
    m.def("apply_adjoint", &apply_adjoint, py::arg("model"), py::arg("nu"), py::arg("m"),
          py::arg("t"), py::arg("u"));

    py::class_<FpSolution>(m, "FpSolution")
        .def_readonly("dt", &FpSolution::dt)
        .def_readonly("mass_drift", &FpSolution::mass_drift)
        .def("mass_drift_max", &FpSolution::mass_drift_max)
        .def("final_density", &FpSolution::final_density, py::arg("tol_mass") = 2e-2)
        .def("law_trajectory", &FpSolution::law_trajectory)
        .def("to_csv", &FpSolution::to_csv);

    m.def(
        "solve_fp",
        [](const CoefficientModel& model, const JumpMeasure& nu, const GridDensity& m0,
           const ControlPolicy& policy, double dt, double T, double negative_tol,
           double mass_drift_tol, std::size_t store_stride) {
            FpOptions options;
            options.negative_tol = negative_tol;
            options.mass_drift_tol = mass_drift_tol;
            options.store_stride = store_stride;
            return solve_fp(model, nu, m0, policy, dt, T, options);
        },
        py::arg("model"), py::arg("nu"), py::arg("m0"), py::arg("policy"), py::arg("dt"),
        py::arg("T"), py::arg("negative_tol") = 1e-8, py::arg("mass_drift_tol") = 1e-2,
        py::arg("store_stride") = 1);

    m.def("characteristic_rhs", &characteristic_rhs, py::arg("ensemble"), py::arg("model"),
          py::arg("nu"), py::arg("t"), py::arg("y"), py::arg("u") = 0.0);

    py::class_<CharacteristicCheckRow>(m, "CharacteristicCheckRow")
        .def_readonly("t", &CharacteristicCheckRow::t)
        .def_readonly("y", &CharacteristicCheckRow::y)
        .def_readonly("fd", &CharacteristicCheckRow::fd)
        .def_readonly("rhs", &CharacteristicCheckRow::rhs)
        .def_readonly("discrepancy", &CharacteristicCheckRow::discrepancy)
        .def_readonly("band", &CharacteristicCheckRow::band);

    py::class_<CharacteristicCheckReport>(m, "CharacteristicCheckReport")
        .def_readonly("rows", &CharacteristicCheckReport::rows)
        .def_readonly("max_discrepancy", &CharacteristicCheckReport::max_discrepancy)
        .def("worst_excess", &CharacteristicCheckReport::worst_excess)
        .def("to_csv", &CharacteristicCheckReport::to_csv);

    m.def("check_characteristic_evolution", &check_characteristic_evolution,
          py::arg("simulation"), py::arg("model"), py::arg("nu"), py::arg("y_values"),
          py::arg("h"), py::arg("check_times"), py::arg("u") = 0.0);

    // hjb -----------------------------------------------------------------------
    py::class_<CylindricalValueFunction>(m, "CylindricalValueFunction")
        .def_static(
            "with_numeric_derivatives",
            [](std::vector<TestPolynomial> qs,
               const std::function<double(double, double, std::vector<double>)>& value, double h_s,
               double h_x, double h_z) {
                auto wrapped = [value](double s, double x, std::span<const double> z) {
                    return value(s, x, std::vector<double>(z.begin(), z.end()));
                };
                return CylindricalValueFunction::with_numeric_derivatives(std::move(qs), wrapped,
                                                                          h_s, h_x, h_z);
            },
            py::arg("test_polys"), py::arg("value"), py::arg("h_s") = 1e-5, py::arg("h_x") = 1e-5,
            py::arg("h_z") = 1e-5)
        .def("value",
             [](const CylindricalValueFunction& phi, double s, double x, std::vector<double> z) {
                 return phi.value(s, x, z);
             })
        .def("pairings", &CylindricalValueFunction::pairings);

    py::class_<RunningCost>(m, "RunningCost")
        .def(py::init([](const std::function<double(double, double, const LawView&, double)>& f,
                         const std::function<double(double, const LawView&)>& g) {
                 return RunningCost{f, g};
             }),
             py::arg("f"), py::arg("g"));

    m.def("make_control_grid", &make_control_grid, py::arg("u_min"), py::arg("u_max"),
          py::arg("du"));
    m.def("lifted_m_derivative", &lifted_m_derivative, py::arg("phi"), py::arg("model"),
          py::arg("nu"), py::arg("s"), py::arg("x"), py::arg("m"), py::arg("u"));
    m.def(
        "pairing_with_generator",
        [](const CoefficientModel& model, const JumpMeasure& nu, const GridDensity& m, double s,
           const TestPolynomial& q, double u) {
            return pairing_with_generator(model, nu, m, LawView(m), s, q, u);
        },
        py::arg("model"), py::arg("nu"), py::arg("m"), py::arg("s"), py::arg("q"), py::arg("u"),
        "<m, A_u q> by quadrature against m.");
    m.def("generator_apply", &generator_apply, py::arg("phi"), py::arg("model"), py::arg("nu"),
          py::arg("s"), py::arg("x"), py::arg("m"), py::arg("u"));

    py::class_<EvalBox>(m, "EvalBox")
        .def(py::init([](std::vector<double> s, std::vector<double> x,
                         std::vector<GridDensity> scenarios, double terminal_time) {
                 return EvalBox{std::move(s), std::move(x), std::move(scenarios), terminal_time};
             }),
             py::arg("s_values"), py::arg("x_values"), py::arg("scenarios"),
             py::arg("terminal_time"));

    py::class_<HjbReport>(m, "HjbReport")
        .def_readonly("max_residual", &HjbReport::max_residual)
        .def_readonly("argmax_control", &HjbReport::argmax_control)
        .def_readonly("terminal_mismatch", &HjbReport::terminal_mismatch)
        .def_readonly("pass_", &HjbReport::pass)
        .def("to_json", &HjbReport::to_json);

    m.def("hjb_residual", &hjb_residual, py::arg("phi"), py::arg("cost"), py::arg("model"),
          py::arg("nu"), py::arg("controls"), py::arg("box"), py::arg("tolerance"));

    m.def(
        "estimate_performance",
        [](const CoefficientModel& model, const ControlPolicy& policy, const JumpMeasure& nu,
           const RunningCost& cost, double x0, std::size_t N, double dt, double T,
           std::uint64_t seed, std::size_t replicates) {
            const auto est =
                estimate_performance(model, policy, nu, cost, x0, N, dt, T, seed, replicates);
            return py::make_tuple(est.estimate, est.std_error, est.replicate_values);
        },
        py::arg("model"), py::arg("policy"), py::arg("nu"), py::arg("cost"), py::arg("x0"),
        py::arg("N"), py::arg("dt"), py::arg("T"), py::arg("seed"), py::arg("replicates") = 8);

    // games ------------------------------------------------------------------------
    py::class_<GameCoefficientModel>(m, "GameCoefficientModel")
        .def(py::init([](std::function<double(double, double, const LawView&, double, double)> a,
                         std::function<double(double, double, const LawView&, double, double)> b,
                         std::function<double(double, const LawView&, double, double, double)> g) {
                 return GameCoefficientModel{std::move(a), std::move(b), std::move(g)};
             }),
             py::arg("alpha"), py::arg("beta"), py::arg("gamma"),
             "alpha, beta: (t, x, law, u1, u2) -> float; gamma: (t, law, u1, u2, zeta) -> float");

    py::class_<GameRunningCost>(m, "GameRunningCost")
        .def(py::init(
                 [](std::function<double(double, double, const LawView&, double, double)> f,
                    std::function<double(double, const LawView&)> g) {
                     return GameRunningCost{std::move(f), std::move(g)};
                 }),
             py::arg("f"), py::arg("g"));

    m.def("fix_control", &fix_control, py::arg("game"), py::arg("player"),
          py::arg("frozen_value"));
    m.def("game_generator_apply", &game_generator_apply, py::arg("phi"), py::arg("game"),
          py::arg("nu"), py::arg("s"), py::arg("x"), py::arg("m"), py::arg("u1"), py::arg("u2"));

    py::class_<GameConditionResult>(m, "GameConditionResult")
        .def_readonly("worst_value", &GameConditionResult::worst_value)
        .def_readonly("worst_control", &GameConditionResult::worst_control)
        .def_readonly("pass_", &GameConditionResult::pass);

    py::class_<ZeroSumReport>(m, "ZeroSumReport")
        .def_readonly("sup_u1", &ZeroSumReport::sup_u1)
        .def_readonly("inf_u2", &ZeroSumReport::inf_u2)
        .def_readonly("at_hat", &ZeroSumReport::at_hat)
        .def_readonly("terminal_mismatch", &ZeroSumReport::terminal_mismatch)
        .def_readonly("pass_", &ZeroSumReport::pass)
        .def("to_json", &ZeroSumReport::to_json);

    m.def("hjbi_zero_sum_check", &hjbi_zero_sum_check, py::arg("phi"), py::arg("cost"),
          py::arg("game"), py::arg("nu"), py::arg("u1_grid"), py::arg("u2_grid"),
          py::arg("hat_u1"), py::arg("hat_u2"), py::arg("box"), py::arg("tolerance"));

    py::class_<NashPlayerResult>(m, "NashPlayerResult")
        .def_readonly("max_deviation_gain", &NashPlayerResult::max_deviation_gain)
        .def_readonly("equation_residual", &NashPlayerResult::equation_residual)
        .def_readonly("terminal_mismatch", &NashPlayerResult::terminal_mismatch)
        .def_readonly("pass_", &NashPlayerResult::pass);

    py::class_<NashReport>(m, "NashReport")
        .def_readonly("player1", &NashReport::player1)
        .def_readonly("player2", &NashReport::player2)
        .def_readonly("pass_", &NashReport::pass)
        .def("to_json", &NashReport::to_json);

    m.def("nash_check", &nash_check, py::arg("phi1"), py::arg("phi2"), py::arg("cost1"),
          py::arg("cost2"), py::arg("game"), py::arg("nu"), py::arg("u1_grid"),
          py::arg("u2_grid"), py::arg("hat_u1"), py::arg("hat_u2"), py::arg("box"),
          py::arg("tolerance"));

    // closed forms -----------------------------------------------------------------
    py::class_<RiccatiCurves>(m, "RiccatiCurves")
        .def_readonly("T", &RiccatiCurves::T)
        .def_readonly("dt", &RiccatiCurves::dt)
        .def_readonly("sigma_eff_sq", &RiccatiCurves::sigma_eff_sq)
        .def_readonly("s", &RiccatiCurves::s)
        .def_readonly("k1", &RiccatiCurves::k1)
        .def_readonly("k2", &RiccatiCurves::k2)
        .def_readonly("k3", &RiccatiCurves::k3)
        .def("k1_at", &RiccatiCurves::k1_at)
        .def("k2_at", &RiccatiCurves::k2_at)
        .def("k3_at", &RiccatiCurves::k3_at)
        .def("to_csv", &RiccatiCurves::to_csv);

    m.def("riccati_solve", &riccati_solve, py::arg("sigma"), py::arg("jump_second_moment"),
          py::arg("T"), py::arg("dt"));
    m.def("lq_feedback", &lq_feedback);
    m.def("lq_value", &lq_value);
    m.def("lq_running_cost", &lq_running_cost);
    m.def("lq_model", &lq_model, py::arg("sigma"), py::arg("gamma0_scale") = 0.0);

    py::class_<ConsumptionSolution>(m, "ConsumptionSolution")
        .def("kappa0", &ConsumptionSolution::kappa0)
        .def("kappa1", &ConsumptionSolution::kappa1)
        .def("c_hat", &ConsumptionSolution::c_hat)
        .def("to_csv", &ConsumptionSolution::to_csv, py::arg("path"), py::arg("samples") = 201);

    m.def(
        "consumption_solution",
        [](double theta, double T, double rho, double quad_dt) {
            return consumption_solution(theta, T, [rho](double) { return rho; }, quad_dt);
        },
        py::arg("theta"), py::arg("T"), py::arg("rho") = 0.0, py::arg("quad_dt") = 1e-4);
    m.def("consumption_policy", &consumption_policy);
    m.def(
        "consumption_value_and_objective",
        [](const ConsumptionSolution& sol, double x0, double quad_dt) {
            const auto eval = consumption_value_and_objective(sol, x0, quad_dt);
            return py::make_tuple(eval.value, eval.objective);
        },
        py::arg("sol"), py::arg("x0"), py::arg("quad_dt") = 1e-4);
    m.def("consumption_objective", &consumption_objective, py::arg("sol"), py::arg("c"),
          py::arg("x0"), py::arg("quad_dt") = 1e-4);

    // scenarios ---------------------------------------------------------------------
    m.def(
        "run_scenario",
        [](const std::string& config, const std::string& out_dir,
           std::optional<std::uint64_t> seed, bool quiet) {
            const auto outcome = run_scenario(config, out_dir, seed, quiet);
            return py::make_tuple(outcome.pass, outcome.seed, outcome.message);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("seed") = std::nullopt,
        py::arg("quiet") = true);
}
