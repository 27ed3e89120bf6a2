#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mvjump/dynamics.hpp"
#include "mvjump/jumps.hpp"
#include "mvjump/measures.hpp"

namespace mvjump {

/// A*_u m = -(alpha m)' + (1/2)(beta^2 m)'' + int { m(.-gamma) - m + gamma m' } nu(dzeta),
/// with central differences in the interior, one-sided stencils at the ends
/// and the gamma-shift for the translated density. The result is a signed
/// grid function, not a density.
std::vector<double> apply_adjoint(const CoefficientModel& model, const JumpMeasure& nu,
                                  const GridDensity& m, double t, double u);

struct FpOptions {
    /// Undershoots past -negative_tol abort; milder negatives are clipped to 0
    /// and the clipped mass is tracked.
    double negative_tol = 1e-8;
    double mass_drift_tol = 1e-2;
    /// Keep every store_stride-th frame (plus the final one) for output.
    std::size_t store_stride = 1;
};

struct FpSolution {
    GridSpec grid;
    double dt = 0.0;
    std::vector<std::size_t> frame_steps;
    std::vector<std::vector<double>> frames;
    std::vector<LawView> views;          ///< one per time step, 0..K
    std::vector<double> mass_drift;      ///< |mass - 1| per step, 0..K
    double clipped_mass_total = 0.0;

    double time_of_frame(std::size_t f) const { return dt * static_cast<double>(frame_steps[f]); }
    GridDensity final_density(double tol_mass = 2e-2) const;
    double mass_drift_max() const;
    LawTrajectory law_trajectory() const { return LawTrajectory{dt, views}; }

    /// header: time,x,density (stored frames only)
    void to_csv(const std::string& path) const;
};

/// Explicit Euler time stepping of dm/dt = A*_u m with the control read from
/// the policy against the current grid density. Enforces the explicit-scheme
/// stability bound dt <= dx^2 / max(beta^2).
FpSolution solve_fp(const CoefficientModel& model, const JumpMeasure& nu, const GridDensity& m0,
                    const ControlPolicy& policy, double dt, double T, const FpOptions& options = {});

/// Monte Carlo estimate over the ensemble of
///   L_t(y) = E[(-i y alpha - y^2 beta^2 / 2 + int {e^{-i y gamma} - 1 + i y gamma} nu) e^{-i y X}].
std::complex<double> characteristic_rhs(const EmpiricalEnsemble& ensemble,
                                        const CoefficientModel& model, const JumpMeasure& nu,
                                        double t, double y, double u);

struct CharacteristicCheckRow {
    double t = 0.0;
    double y = 0.0;
    std::complex<double> fd;   ///< (mu^_{t+h}(y) - mu^_t(y)) / h
    std::complex<double> rhs;  ///< L_t(y)
    double discrepancy = 0.0;  ///< |fd - rhs|
    double band = 0.0;         ///< 3 Monte Carlo standard errors of the discrepancy
};

struct CharacteristicCheckReport {
    double h = 0.0;
    std::vector<CharacteristicCheckRow> rows;
    double max_discrepancy = 0.0;

    /// Worst excess of discrepancy over band + slack (<= 0 means all inside).
    double worst_excess(double slack) const;
    void to_csv(const std::string& path) const;  // header: t,y,fd_re,fd_im,rhs_re,rhs_im,discrepancy,band
};

/// Checks d/dt mu^_t(y) = L_t(y) on simulated data: finite difference across a
/// window h against the generator-side estimate, with a per-y Monte Carlo
/// error band from the common particles. Report-only.
CharacteristicCheckReport check_characteristic_evolution(const SimulationResult& simulation,
                                                         const CoefficientModel& model,
                                                         const JumpMeasure& nu,
                                                         const std::vector<double>& y_values,
                                                         double h,
                                                         const std::vector<double>& check_times,
                                                         double u = 0.0);

}  // namespace mvjump
