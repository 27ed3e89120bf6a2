#include "mvjump/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvjump/csv.hpp"
#include "mvjump/parallel.hpp"

namespace mvjump {

namespace {

constexpr double kOverflowGuard = 1e12;

std::size_t step_count(double dt, double T) {
    if (!(dt > 0.0) || !(T > 0.0) || dt > T * (1.0 + 1e-12))
        throw std::invalid_argument("time grid: need 0 < dt <= T");
    const double k = T / dt;
    const double rounded = std::round(k);
    if (std::abs(k - rounded) > 1e-6 * std::max(1.0, k))
        throw std::invalid_argument("time grid: T/dt is not an integer");
    return static_cast<std::size_t>(rounded);
}

LawView law_of_positions(const std::vector<double>& pos) {
    // Raw moments 0..4, accumulated in index order (deterministic).
    std::array<double, 5> m{};
    for (double p : pos) {
        double xpow = 1.0;
        for (auto& mom : m) {
            mom += xpow;
            xpow *= p;
        }
    }
    for (auto& mom : m) mom /= static_cast<double>(pos.size());
    return LawView(m);
}

void check_finite(double v, const char* what, std::size_t step, std::size_t particle) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("simulate_particles: non-finite ") + what +
                                 " at step " + std::to_string(step) + ", particle " +
                                 std::to_string(particle));
}

}  // namespace

// CoefficientModel -------------------------------------------------------

CoefficientModel::CoefficientModel(StateCoefficient alpha, StateCoefficient beta,
                                   JumpCoefficient gamma)
    : alpha_(std::move(alpha)), beta_(std::move(beta)), gamma_(std::move(gamma)) {
    if (!alpha_ || !beta_ || !gamma_)
        throw std::invalid_argument("CoefficientModel: all three evaluators must be set");
    // Spot-check finiteness on a small probe set.
    const LawView probe = LawView::standard_probe();
    for (double t : {0.0, 0.5}) {
        for (double x : {-1.0, 0.0, 1.0}) {
            if (!std::isfinite(alpha_(t, x, probe, 0.0)))
                throw std::invalid_argument("CoefficientModel: alpha is not finite on probe set");
            if (!std::isfinite(beta_(t, x, probe, 0.0)))
                throw std::invalid_argument("CoefficientModel: beta is not finite on probe set");
        }
        for (double zeta : {0.0, 1.0})
            if (!std::isfinite(gamma_(t, probe, 0.0, zeta)))
                throw std::invalid_argument("CoefficientModel: gamma is not finite on probe set");
    }
}

CoefficientModel CoefficientModel::zero() {
    return CoefficientModel([](double, double, const LawView&, double) { return 0.0; },
                            [](double, double, const LawView&, double) { return 0.0; },
                            [](double, const LawView&, double, double) { return 0.0; });
}

// ControlPolicy ------------------------------------------------------------

ControlPolicy::ControlPolicy(Evaluator evaluator, double u_min, double u_max)
    : evaluator_(std::move(evaluator)), u_min_(u_min), u_max_(u_max) {
    if (!evaluator_) throw std::invalid_argument("ControlPolicy: evaluator must be set");
    if (!(u_min_ <= u_max_)) throw std::invalid_argument("ControlPolicy: u_min must be <= u_max");
}

double ControlPolicy::operator()(double t, double x, const LawView& law) const {
    return std::clamp(evaluator_(t, x, law), u_min_, u_max_);
}

ControlPolicy ControlPolicy::constant(double value) {
    return ControlPolicy([value](double, double, const LawView&) { return value; }, value, value);
}

// LawTrajectory -------------------------------------------------------------

std::size_t LawTrajectory::step_of(double t) const {
    if (views.empty()) throw std::domain_error("LawTrajectory: empty trajectory");
    const double k = t / dt;
    const auto idx = static_cast<long long>(std::llround(k));
    if (t < -1e-9 || idx < 0 || idx >= static_cast<long long>(views.size()))
        throw std::domain_error("LawTrajectory: t=" + std::to_string(t) +
                                " outside the frozen-law horizon");
    return static_cast<std::size_t>(idx);
}

LawTrajectory LawTrajectory::thinned(std::size_t stride) const {
    if (stride == 0) throw std::invalid_argument("LawTrajectory::thinned: stride must be >= 1");
    LawTrajectory out;
    out.dt = dt * static_cast<double>(stride);
    for (std::size_t k = 0; k < views.size(); k += stride) out.views.push_back(views[k]);
    return out;
}

// SimulationResult ------------------------------------------------------------

LawTrajectory SimulationResult::law_trajectory() const {
    LawTrajectory traj;
    traj.dt = dt;
    traj.views.reserve(ensembles.size());
    for (const auto& e : ensembles) traj.views.emplace_back(e);
    return traj;
}

void SimulationResult::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(ensembles.size());
    for (std::size_t k = 0; k < ensembles.size(); ++k) {
        const auto pos = ensembles[k].positions();
        double mean = 0.0, lo = pos[0], hi = pos[0];
        for (double p : pos) {
            mean += p;
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        mean /= static_cast<double>(pos.size());
        double var = 0.0;
        for (double p : pos) var += (p - mean) * (p - mean);
        var /= static_cast<double>(pos.size());
        rows.push_back({static_cast<double>(k), times[k], mean, var, lo, hi});
    }
    csv::write(path, {"step", "time", "mean", "variance", "min", "max"}, rows);
}

void SimulationResult::ensemble_to_csv(const std::string& path, std::size_t step) const {
    ensembles.at(step).to_csv(path);
}

// simulate_particles ---------------------------------------------------------

SimulationResult simulate_particles_from(const CoefficientModel& model,
                                         const ControlPolicy& policy, const JumpMeasure& nu,
                                         std::vector<double> initial_positions, double dt,
                                         double T, std::uint64_t seed) {
    const std::size_t K = step_count(dt, T);
    const std::size_t N = initial_positions.size();
    if (N == 0) throw std::invalid_argument("simulate_particles: N must be >= 1");

    SimulationResult result;
    result.dt = dt;
    result.times.reserve(K + 1);
    result.ensembles.reserve(K + 1);
    result.controls.reserve(K);

    std::vector<RngStream> streams;
    streams.reserve(N);
    for (std::size_t j = 0; j < N; ++j) streams.emplace_back(seed, j);

    std::vector<double> x = std::move(initial_positions);
    std::vector<double> x_next(N);
    std::vector<double> u_used(N);
    const double sqrt_dt = std::sqrt(dt);
    const auto& atoms = nu.atoms();

    result.times.push_back(0.0);
    result.ensembles.emplace_back(x);

    for (std::size_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * dt;
        const LawView law = law_of_positions(x);

        parallel_for(N, [&](std::size_t j) {
            const double xj = x[j];
            const double u = policy(t, xj, law);
            const double a = model.alpha(t, xj, law, u);
            const double b = model.beta(t, xj, law, u);
            check_finite(a, "alpha", k, j);
            check_finite(b, "beta", k, j);

            double dx = a * dt + b * sqrt_dt * streams[j].normal();
            if (!atoms.empty()) {
                double compensator = 0.0;
                for (const auto& atom : atoms) {
                    const double g = model.gamma(t, law, u, atom.zeta);
                    check_finite(g, "gamma", k, j);
                    compensator += g * atom.intensity;
                }
                const auto marks = sample_jump_marks(nu, dt, streams[j]);
                for (double zeta : marks) dx += model.gamma(t, law, u, zeta);
                dx -= dt * compensator;
            }

            const double xn = xj + dx;
            check_finite(xn, "state", k, j);
            if (std::abs(xn) > kOverflowGuard)
                throw std::runtime_error("simulate_particles: particle " + std::to_string(j) +
                                         " diverged at step " + std::to_string(k));
            x_next[j] = xn;
            u_used[j] = u;
        });

        StepControlSummary summary;
        summary.mean = 0.0;
        summary.min = u_used[0];
        summary.max = u_used[0];
        for (double u : u_used) {
            summary.mean += u;
            summary.min = std::min(summary.min, u);
            summary.max = std::max(summary.max, u);
        }
        summary.mean /= static_cast<double>(N);
        result.controls.push_back(summary);

        x.swap(x_next);
        result.times.push_back(static_cast<double>(k + 1) * dt);
        result.ensembles.emplace_back(x);  // EmpiricalEnsemble validates moments are finite
    }
    return result;
}

SimulationResult simulate_particles(const CoefficientModel& model, const ControlPolicy& policy,
                                    const JumpMeasure& nu, double x0, std::size_t N, double dt,
                                    double T, std::uint64_t seed) {
    if (!std::isfinite(x0)) throw std::invalid_argument("simulate_particles: x0 must be finite");
    return simulate_particles_from(model, policy, nu, std::vector<double>(N, x0), dt, T, seed);
}

std::vector<double> normal_initial_positions(double mean, double stddev, std::size_t N,
                                             std::uint64_t seed, std::uint64_t stream_id) {
    RngStream rng(seed ^ 0x8f1bbcdcbfa53e0bULL, stream_id);
    std::vector<double> pos(N);
    for (auto& p : pos) p = mean + stddev * rng.normal();
    return pos;
}

// abc_coefficients ------------------------------------------------------------

AbcCoefficients abc_coefficients(const CoefficientModel& model, double t, double x,
                                 const LawView& law, double u, double h_x) {
    if (!(h_x > 0.0)) throw std::invalid_argument("abc_coefficients: h_x must be > 0");
    const auto beta2 = [&](double xx) {
        const double b = model.beta(t, xx, law, u);
        return b * b;
    };
    const double alpha_p = (model.alpha(t, x + h_x, law, u) - model.alpha(t, x - h_x, law, u)) /
                           (2.0 * h_x);
    const double b2_mid = beta2(x);
    const double b2_hi = beta2(x + h_x);
    const double b2_lo = beta2(x - h_x);
    AbcCoefficients out;
    out.a = -alpha_p + 0.5 * (b2_hi - 2.0 * b2_mid + b2_lo) / (h_x * h_x);
    out.b = -model.alpha(t, x, law, u) + (b2_hi - b2_lo) / (2.0 * h_x);
    out.c = model.beta(t, x, law, u);
    return out;
}

// feynman_kac_density -----------------------------------------------------------

MonteCarloEstimate feynman_kac_density(const CoefficientModel& model, const JumpMeasure& nu,
                                       const GridDensity& m0, const LawTrajectory& frozen_law,
                                       double x, double t, std::size_t n_paths,
                                       std::uint64_t seed, double h_x) {
    if (t < 0.0 || t > frozen_law.horizon() + 1e-9)
        throw std::domain_error("feynman_kac_density: t outside the frozen-law horizon");
    if (t <= 1e-15) return {m0.value_at(x), 0.0};
    if (n_paths == 0) throw std::invalid_argument("feynman_kac_density: n_paths must be >= 1");

    const double dt = frozen_law.dt;
    const auto K = static_cast<std::size_t>(std::llround(t / dt));

    // Theorem hypothesis: the zero-order weight a must be bounded. Probe it
    // over the spatial range of m0 and the trajectory before paying for paths.
    for (std::size_t k = 0; k <= K; k += std::max<std::size_t>(1, K / 4)) {
        const double s = static_cast<double>(k) * dt;
        const LawView& law = frozen_law.views[std::min(k, frozen_law.views.size() - 1)];
        for (int p = 0; p <= 8; ++p) {
            const double xp = m0.x_min() + m0.width() * static_cast<double>(p) / 8.0;
            const double a = abc_coefficients(model, s, xp, law, 0.0, h_x).a;
            if (!std::isfinite(a) || std::abs(a) > 1e8)
                throw std::runtime_error("feynman_kac_density: weight a(s,x) unbounded at s=" +
                                         std::to_string(s) + ", x=" + std::to_string(xp));
        }
    }

    const double sqrt_dt = std::sqrt(dt);
    const auto& atoms = nu.atoms();
    std::vector<double> samples(n_paths);

    parallel_for(n_paths, [&](std::size_t p) {
        RngStream rng(seed ^ 0x6a09e667f3bcc909ULL, p);
        double y = x;
        double log_w = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double s = static_cast<double>(k) * dt;
            const LawView& law = frozen_law.views[k];
            const AbcCoefficients abc = abc_coefficients(model, s, y, law, 0.0, h_x);
            double dy = abc.b * dt + abc.c * sqrt_dt * rng.normal();
            if (!atoms.empty()) {
                double compensator = 0.0;
                for (const auto& atom : atoms)
                    compensator += model.gamma(s, law, 0.0, atom.zeta) * atom.intensity;
                const auto marks = sample_jump_marks(nu, dt, rng);
                double jump_sum = 0.0;
                for (double zeta : marks) jump_sum += model.gamma(s, law, 0.0, zeta);
                dy -= jump_sum - dt * compensator;  // -int gamma dN~
            }
            y += dy;
            log_w += abc.a * dt;
            if (!std::isfinite(y))
                throw std::runtime_error("feynman_kac_density: path " + std::to_string(p) +
                                         " diverged at step " + std::to_string(k));
        }
        samples[p] = std::exp(log_w) * m0.value_at(y);
    });

    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(n_paths);
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(n_paths);
    const double se = n_paths > 1 ? std::sqrt(var / static_cast<double>(n_paths)) : 0.0;
    return {mean, se};
}

}  // namespace mvjump
