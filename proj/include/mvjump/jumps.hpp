#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvjump/rng.hpp"

namespace mvjump {

struct JumpAtom {
    double zeta = 0.0;       ///< mark
    double intensity = 0.0;  ///< nu({zeta}) >= 0
};

/// Finite-activity Levy measure: finitely many weighted atoms. Every nu
/// integral downstream is then an exact finite sum, and jump times can be
/// simulated without truncation error.
class JumpMeasure {
  public:
    JumpMeasure() = default;

    explicit JumpMeasure(std::vector<JumpAtom> atoms) : atoms_(std::move(atoms)) {
        double lambda = 0.0;
        double second = 0.0;
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            const auto& atom = atoms_[a];
            if (!std::isfinite(atom.zeta) || !std::isfinite(atom.intensity))
                throw std::invalid_argument("JumpMeasure: non-finite atom " + std::to_string(a));
            if (atom.intensity < 0.0)
                throw std::invalid_argument("JumpMeasure: negative intensity at atom " +
                                            std::to_string(a));
            lambda += atom.intensity;
            second += atom.zeta * atom.zeta * atom.intensity;
        }
        if (!std::isfinite(lambda) || !std::isfinite(second))
            throw std::invalid_argument("JumpMeasure: total intensity or second moment overflows");
        total_intensity_ = lambda;
    }

    const std::vector<JumpAtom>& atoms() const { return atoms_; }
    double total_intensity() const { return total_intensity_; }
    bool empty() const { return atoms_.empty(); }

    /// int zeta^2 nu(dzeta); the paper's standing square-integrability weight.
    double second_moment() const {
        double acc = 0.0;
        for (const auto& atom : atoms_) acc += atom.zeta * atom.zeta * atom.intensity;
        return acc;
    }

  private:
    std::vector<JumpAtom> atoms_;
    double total_intensity_ = 0.0;
};

/// int f(zeta) nu(dzeta) = sum_a f(zeta_a) nu_a. Works for real or complex f.
template <class F>
auto nu_integral(const JumpMeasure& nu, F&& f) {
    using R = decltype(f(0.0));
    R acc{};
    const auto& atoms = nu.atoms();
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const R term = f(atoms[a].zeta);
        if (!std::isfinite(std::abs(term)))
            throw std::runtime_error("nu_integral: f is not finite at atom " + std::to_string(a) +
                                     " (zeta=" + std::to_string(atoms[a].zeta) + ")");
        acc += term * atoms[a].intensity;
    }
    return acc;
}

/// Marks of the jumps arriving during a window of length dt: Poisson(lambda
/// dt) count, then i.i.d. marks from the normalised atom distribution.
/// Deterministic given the stream state; lambda = 0 yields an empty list.
inline std::vector<double> sample_jump_marks(const JumpMeasure& nu, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_jump_marks: dt must be > 0");
    std::vector<double> marks;
    const double lambda = nu.total_intensity();
    if (lambda <= 0.0) return marks;
    const auto count = rng.poisson(lambda * dt);
    marks.reserve(count);
    const auto& atoms = nu.atoms();
    for (std::uint64_t k = 0; k < count; ++k) {
        const double u = rng.uniform01() * lambda;
        double cum = 0.0;
        double mark = atoms.back().zeta;
        for (const auto& atom : atoms) {
            cum += atom.intensity;
            if (u < cum) {
                mark = atom.zeta;
                break;
            }
        }
        marks.push_back(mark);
    }
    return marks;
}

}  // namespace mvjump
