#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "mvjump/dynamics.hpp"
#include "mvjump/hjb.hpp"
#include "mvjump/jumps.hpp"

namespace mvjump {

/// kappa_1,2,3 of the quadratic value ansatz, sampled on a uniform time grid
/// with exact terminal values kappa1(T) = -1/2, kappa2(T) = kappa3(T) = 0.
struct RiccatiCurves {
    double T = 0.0;
    double dt = 0.0;
    double sigma_eff_sq = 0.0;
    std::vector<double> s;
    std::vector<double> k1, k2, k3;
    /// Derivatives of the solved curves, stored at solve time. Deliberately
    /// not recomputed from k1..k3: a perturbed candidate must keep the stale
    /// slopes so the HJB verifier can see the inconsistency.
    std::vector<double> k1p, k2p, k3p;

    double k1_at(double t) const;
    double k2_at(double t) const;
    double k3_at(double t) const;
    std::array<double, 3> derivative_at(double t) const;

    void to_csv(const std::string& path) const;  // header: s,k1,k2,k3

  private:
    double interpolate(const std::vector<double>& k, double t) const;
};

/// Backward RK4 integration of
///   k1' = -(1/2)(2k1+k2)^2
///   k2' = -(2k1+k2)(k2+2k3)
///   k3' = -(1/2)(k2+2k3)^2 - k1 sigma_eff^2,  sigma_eff^2 = sigma^2 + jump_second_moment.
/// With these curves the quadratic candidate solves the LQ HJB identically;
/// jump_second_moment = int gamma0^2 dnu absorbs the jump bracket of the
/// quadratic candidate (0 when the dynamics carry no jumps).
RiccatiCurves riccati_solve(double sigma, double jump_second_moment, double T, double dt);

/// Feedback law u(t, x, m) = (2k1+k2) x + (k2+2k3) <m,q>, q(x) = x.
ControlPolicy lq_feedback(const RiccatiCurves& curves);

/// phi(s,x,m) = k1(s) x^2 + k2(s) x <m,q> + k3(s) <m,q>^2 with analytic
/// derivatives (dF/ds via the Riccati right-hand side).
CylindricalValueFunction lq_value(const RiccatiCurves& curves);

/// f = -(1/2) u^2, g = -(1/2) x^2.
RunningCost lq_running_cost();

/// LQ dynamics: alpha = u, beta = sigma <m,q>, gamma = gamma0_scale * zeta * <m,q>.
CoefficientModel lq_model(double sigma, double gamma0_scale = 0.0);

/// Closed-form log-utility consumption solution:
///   kappa1(s) = theta + T - s,
///   kappa0'(s) = 1 + ln kappa1(s) - rho(s) kappa1(s), kappa0(T) = 0,
/// kappa0 evaluated by composite Simpson quadrature with step quad_dt.
class ConsumptionSolution {
  public:
    ConsumptionSolution(double theta, double T, std::function<double(double)> rho, double quad_dt);

    double theta() const { return theta_; }
    double T() const { return T_; }
    double quad_dt() const { return quad_dt_; }
    double rho(double s) const { return rho_(s); }

    double kappa1(double s) const { return theta_ + T_ - s; }
    double kappa0(double s) const;
    double c_hat(double s) const { return 1.0 / kappa1(s); }

    void to_csv(const std::string& path, std::size_t samples = 201) const;  // s,k0,k1,c_hat

  private:
    double theta_;
    double T_;
    std::function<double(double)> rho_;
    double quad_dt_;
};

ConsumptionSolution consumption_solution(double theta, double T,
                                         std::function<double(double)> rho, double quad_dt);

/// Deterministic consumption rate c(t) = 1/kappa1(t).
ControlPolicy consumption_policy(const ConsumptionSolution& sol);

struct ConsumptionEvaluation {
    double value = 0.0;      ///< phi(0, x0, m0) = kappa0(0) + kappa1(0) ln x0
    double objective = 0.0;  ///< J(c^) from the deterministic mean dynamics
};

/// The objective of a deterministic consumption path c(t):
///   J(c) = int_0^T ln(c(t) M(t)) dt + theta ln M(T),  M' = (rho - c) M, M(0) = x0.
/// The terminal reward is log-utility of the mean; that is the reading under
/// which the candidate's terminal condition matches g and the verification
/// identity J(c^) = phi(0) holds.
double consumption_objective(const ConsumptionSolution& sol,
                             const std::function<double(double)>& c, double x0, double quad_dt);

/// Computes the candidate value at (0, x0) and, independently, J(c^) by
/// quadrature; the two agree to quadrature accuracy.
ConsumptionEvaluation consumption_value_and_objective(const ConsumptionSolution& sol, double x0,
                                                      double quad_dt);

/// Consumption problem cost: f = ln(c <m,q>), g = theta ln <m,q>.
RunningCost consumption_running_cost(double theta);

/// Consumption dynamics: alpha = (rho(t) - u) <m,q>, beta = sigma0 <m,q>,
/// gamma = gamma0_scale * zeta * <m,q>.
CoefficientModel consumption_model(std::function<double(double)> rho, double sigma0,
                                   double gamma0_scale = 0.0);

}  // namespace mvjump
