#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvjump/jumps.hpp"
#include "mvjump/measures.hpp"

namespace mvjump {

/// Coefficient bundle of the controlled law-dependent dynamics
///   dX = alpha dt + beta dB + int gamma dN~.
/// gamma takes no state argument: the jump size may depend on time, law and
/// control but not on x, which is what makes the density-level shift identity
/// (and the whole Fokker-Planck pipeline) available.
class CoefficientModel {
  public:
    using StateCoefficient = std::function<double(double t, double x, const LawView&, double u)>;
    using JumpCoefficient = std::function<double(double t, const LawView&, double u, double zeta)>;

    CoefficientModel(StateCoefficient alpha, StateCoefficient beta, JumpCoefficient gamma);

    double alpha(double t, double x, const LawView& law, double u) const { return alpha_(t, x, law, u); }
    double beta(double t, double x, const LawView& law, double u) const { return beta_(t, x, law, u); }
    double gamma(double t, const LawView& law, double u, double zeta) const { return gamma_(t, law, u, zeta); }

    static CoefficientModel zero();

  private:
    StateCoefficient alpha_;
    StateCoefficient beta_;
    JumpCoefficient gamma_;
};

/// Markov feedback control, clamped to the admissible box [u_min, u_max].
class ControlPolicy {
  public:
    using Evaluator = std::function<double(double t, double x, const LawView&)>;

    ControlPolicy(Evaluator evaluator, double u_min, double u_max);

    double operator()(double t, double x, const LawView& law) const;
    double u_min() const { return u_min_; }
    double u_max() const { return u_max_; }

    static ControlPolicy constant(double value);
    static ControlPolicy zero() { return constant(0.0); }

  private:
    Evaluator evaluator_;
    double u_min_;
    double u_max_;
};

/// Time-indexed sequence of law snapshots on a uniform time grid; the frozen
/// law trajectory fed to the Feynman-Kac solver.
struct LawTrajectory {
    double dt = 0.0;
    std::vector<LawView> views;

    double horizon() const { return dt * static_cast<double>(views.size() - 1); }
    std::size_t step_of(double t) const;
    const LawView& at(double t) const { return views[step_of(t)]; }
    /// Keeps every stride-th snapshot; dt scales accordingly.
    LawTrajectory thinned(std::size_t stride) const;
};

struct StepControlSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SimulationResult {
    double dt = 0.0;
    std::vector<double> times;                   ///< size K+1
    std::vector<EmpiricalEnsemble> ensembles;    ///< size K+1
    std::vector<StepControlSummary> controls;    ///< size K (controls used on step k)

    std::size_t steps() const { return controls.size(); }
    const EmpiricalEnsemble& initial() const { return ensembles.front(); }
    const EmpiricalEnsemble& final() const { return ensembles.back(); }
    LawTrajectory law_trajectory() const;

    /// header: step,time,mean,variance,min,max
    void to_csv(const std::string& path) const;
    void ensemble_to_csv(const std::string& path, std::size_t step) const;
};

/// Euler-Maruyama over N interacting particles. The law seen by the
/// coefficients at each step is the current empirical ensemble (mean-field
/// coupling); jumps land at step end with the compensator subtracted as an
/// explicit drift correction. Bit-reproducible for fixed (seed, N, dt)
/// whatever the thread count.
SimulationResult simulate_particles(const CoefficientModel& model, const ControlPolicy& policy,
                                    const JumpMeasure& nu, double x0, std::size_t N, double dt,
                                    double T, std::uint64_t seed);

/// Same integrator, arbitrary initial positions (e.g. a spread initial law).
SimulationResult simulate_particles_from(const CoefficientModel& model,
                                         const ControlPolicy& policy, const JumpMeasure& nu,
                                         std::vector<double> initial_positions, double dt,
                                         double T, std::uint64_t seed);

/// N i.i.d. draws from N(mean, stddev^2), stream (seed, stream_id).
std::vector<double> normal_initial_positions(double mean, double stddev, std::size_t N,
                                             std::uint64_t seed, std::uint64_t stream_id = 0);

struct AbcCoefficients {
    double a = 0.0;  ///< -alpha' + (1/2)(beta^2)''
    double b = 0.0;  ///< -alpha + (beta^2)'
    double c = 0.0;  ///< beta
};

/// Coefficients of the density form of the Fokker-Planck equation;
/// x-derivatives by central differences with step h_x.
AbcCoefficients abc_coefficients(const CoefficientModel& model, double t, double x,
                                 const LawView& law, double u = 0.0, double h_x = 1e-4);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Stochastic representation of the Fokker-Planck solution: runs the
/// auxiliary process dY = b dt + c dB - int gamma dN~ from Y(0) = x with all
/// coefficients read along the frozen law trajectory, and averages
/// exp(int a ds) m0(Y(t)) over n_paths.
MonteCarloEstimate feynman_kac_density(const CoefficientModel& model, const JumpMeasure& nu,
                                       const GridDensity& m0, const LawTrajectory& frozen_law,
                                       double x, double t, std::size_t n_paths,
                                       std::uint64_t seed, double h_x = 1e-4);

}  // namespace mvjump
