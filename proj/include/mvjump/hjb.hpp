#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvjump/dynamics.hpp"
#include "mvjump/jumps.hpp"
#include "mvjump/measures.hpp"

namespace mvjump {

/// Candidate value function of cylindrical form
///   phi(s, x, m) = F(s, x, <m,q_1>, ..., <m,q_k>),   k <= 4.
/// Both of the closed-form solutions are of this shape, and for it the
/// measure derivative reduces to the chain rule through the pairings.
class CylindricalValueFunction {
  public:
    using Outer = std::function<double(double s, double x, std::span<const double> z)>;
    using OuterPartial = std::function<double(double s, double x, std::span<const double> z, std::size_t i)>;

    CylindricalValueFunction(std::vector<TestPolynomial> test_polys, Outer value, Outer ds,
                             Outer dx, Outer dxx, OuterPartial dz);

    /// Builds the four derivative evaluators by central differences with the
    /// declared steps.
    static CylindricalValueFunction with_numeric_derivatives(std::vector<TestPolynomial> test_polys,
                                                             Outer value, double h_s, double h_x,
                                                             double h_z);

    const std::vector<TestPolynomial>& test_polys() const { return test_polys_; }
    std::vector<double> pairings(const GridDensity& m) const;

    double value(double s, double x, std::span<const double> z) const { return value_(s, x, z); }
    double ds(double s, double x, std::span<const double> z) const { return ds_(s, x, z); }
    double dx(double s, double x, std::span<const double> z) const { return dx_(s, x, z); }
    double dxx(double s, double x, std::span<const double> z) const { return dxx_(s, x, z); }
    double dz(double s, double x, std::span<const double> z, std::size_t i) const {
        return dz_(s, x, z, i);
    }

  private:
    std::vector<TestPolynomial> test_polys_;
    Outer value_, ds_, dx_, dxx_;
    OuterPartial dz_;
};

/// Running and terminal cost of the control problem.
struct RunningCost {
    std::function<double(double s, double x, const LawView&, double u)> f;
    std::function<double(double x, const LawView&)> g;
};

using ControlGrid = std::vector<double>;
ControlGrid make_control_grid(double u_min, double u_max, double du);

/// <m, A_u q> where A_u q = alpha q' + (1/2) beta^2 q'' + int {q(.+gamma) - q - gamma q'} nu,
/// evaluated by trapezoidal quadrature against m.
double pairing_with_generator(const CoefficientModel& model, const JumpMeasure& nu,
                              const GridDensity& m, const LawView& law, double s,
                              const TestPolynomial& q, double u);

/// <grad_m phi, A*_u m> = sum_i dF/dz_i <m, A_u q_i>  (duality through the pairings).
double lifted_m_derivative(const CylindricalValueFunction& phi, const CoefficientModel& model,
                           const JumpMeasure& nu, double s, double x, const GridDensity& m,
                           double u);

/// Generator of the lifted process (s+t, X(t), m_t):
///   G_u phi = dphi/ds + alpha dphi/dx + <grad_m phi, A*_u m> + (1/2) beta^2 d2phi/dx2
///           + int { phi(s, x+gamma, m) - phi - gamma dphi/dx } nu(dzeta).
double generator_apply(const CylindricalValueFunction& phi, const CoefficientModel& model,
                       const JumpMeasure& nu, double s, double x, const GridDensity& m, double u);

struct EvalBox {
    std::vector<double> s_values;
    std::vector<double> x_values;
    std::vector<GridDensity> scenarios;
    double terminal_time = 1.0;
};

struct HjbPoint {
    double s = 0.0;
    double x = 0.0;
    std::size_t scenario = 0;
};

struct HjbReport {
    double max_residual = 0.0;
    double argmax_control = 0.0;  ///< control attaining the sup at the worst point
    HjbPoint worst;
    double terminal_mismatch = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    std::string to_json() const;
};

/// Verification sweep: at every box point take max_u { f + G_u phi } over the
/// control grid (ties to the lowest grid index) and record the worst
/// |residual|; terminal condition checked as max |phi(T,.,.) - g|.
HjbReport hjb_residual(const CylindricalValueFunction& phi, const RunningCost& cost,
                       const CoefficientModel& model, const JumpMeasure& nu,
                       const ControlGrid& controls, const EvalBox& box, double tolerance);

struct PerformanceEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::vector<double> replicate_values;
};

/// J_u(0, x0, delta_x0) by particle simulation: mean over replicates of
/// (1/N) sum_j [ sum_k f(t_k, X_k^j, law_k, u_k^j) dt + g(X_T^j, law_T) ].
/// Replicates get derived seeds; the standard error is across replicates.
PerformanceEstimate estimate_performance(const CoefficientModel& model,
                                         const ControlPolicy& policy, const JumpMeasure& nu,
                                         const RunningCost& cost, double x0, std::size_t N,
                                         double dt, double T, std::uint64_t seed,
                                         std::size_t replicates = 8);

// ---------------------------------------------------------------------------
// Two-player games (zero-sum HJBI and Nash checks)
// ---------------------------------------------------------------------------

/// Coefficients driven by a control pair (u1, u2).
struct GameCoefficientModel {
    std::function<double(double t, double x, const LawView&, double u1, double u2)> alpha;
    std::function<double(double t, double x, const LawView&, double u1, double u2)> beta;
    std::function<double(double t, const LawView&, double u1, double u2, double zeta)> gamma;
};

/// Freezes one player's control value, yielding a single-control model.
CoefficientModel fix_control(const GameCoefficientModel& game, int player, double frozen_value);

struct GameRunningCost {
    std::function<double(double s, double x, const LawView&, double u1, double u2)> f;
    std::function<double(double x, const LawView&)> g;
};

double game_generator_apply(const CylindricalValueFunction& phi, const GameCoefficientModel& game,
                            const JumpMeasure& nu, double s, double x, const GridDensity& m,
                            double u1, double u2);

struct GameConditionResult {
    double worst_value = 0.0;
    HjbPoint worst;
    double worst_control = 0.0;
    bool pass = false;
};

struct ZeroSumReport {
    GameConditionResult sup_u1;   ///< (i)  max_{u1} G_{u1,hat2} phi + f  must be <= tol
    GameConditionResult inf_u2;   ///< (ii) min_{u2} G_{hat1,u2} phi + f  must be >= -tol
    GameConditionResult at_hat;   ///< (iii) |G_{hat} phi + f|            must be <= tol
    double terminal_mismatch = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    std::string to_json() const;
};

/// Isaacs conditions of the zero-sum verification theorem on a finite box;
/// the stopping-time condition is replaced by the terminal grid check.
ZeroSumReport hjbi_zero_sum_check(const CylindricalValueFunction& phi, const GameRunningCost& cost,
                                  const GameCoefficientModel& game, const JumpMeasure& nu,
                                  const ControlGrid& u1_grid, const ControlGrid& u2_grid,
                                  const ControlPolicy& hat_u1, const ControlPolicy& hat_u2,
                                  const EvalBox& box, double tolerance);

struct NashPlayerResult {
    double max_deviation_gain = 0.0;  ///< max_u (G_u phi_i + f_i) - (G_hat phi_i + f_i)
    double equation_residual = 0.0;   ///< max |G_hat phi_i + f_i(hat)|
    double terminal_mismatch = 0.0;
    HjbPoint worst;
    bool pass = false;
};

struct NashReport {
    NashPlayerResult player1;
    NashPlayerResult player2;
    double tolerance = 0.0;
    bool pass = false;

    std::string to_json() const;
};

/// Nash verification: neither player can gain from a unilateral deviation on
/// their control grid, and each equilibrium equation holds at the candidate.
NashReport nash_check(const CylindricalValueFunction& phi1, const CylindricalValueFunction& phi2,
                      const GameRunningCost& cost1, const GameRunningCost& cost2,
                      const GameCoefficientModel& game, const JumpMeasure& nu,
                      const ControlGrid& u1_grid, const ControlGrid& u2_grid,
                      const ControlPolicy& hat_u1, const ControlPolicy& hat_u2,
                      const EvalBox& box, double tolerance);

}  // namespace mvjump
