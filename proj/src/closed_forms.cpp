#include "mvjump/closed_forms.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "mvjump/csv.hpp"

namespace mvjump {

namespace {

constexpr double kBlowupGuard = 1e6;

std::array<double, 3> riccati_rhs(double k1, double k2, double k3, double sigma_eff_sq) {
    // Collecting the x<m,q> bucket of the quadratic-ansatz HJB gives
    // k2' + (2k1+k2)(k2+2k3) = 0 (unit coefficient: the -u^2/2 cross term
    // cancels half of the two u-linear cross terms).
    const double p = 2.0 * k1 + k2;
    const double q = k2 + 2.0 * k3;
    return {-0.5 * p * p, -p * q, -0.5 * q * q - k1 * sigma_eff_sq};
}

/// Composite Simpson of f over [a, b] with an even number of subintervals of
/// width about `step`.
double simpson(const std::function<double(double)>& f, double a, double b, double step) {
    if (b <= a) return 0.0;
    auto n = static_cast<std::size_t>(std::ceil((b - a) / step));
    if (n < 2) n = 2;
    if (n % 2 == 1) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i)
        acc += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

// RiccatiCurves ---------------------------------------------------------------

double RiccatiCurves::interpolate(const std::vector<double>& k, double t) const {
    if (t < -1e-9 || t > T + 1e-9)
        throw std::domain_error("RiccatiCurves: t=" + std::to_string(t) + " outside [0, T]");
    const double pos = t / dt;
    const auto i = std::min(static_cast<std::size_t>(std::max(pos, 0.0)), k.size() - 1);
    if (i + 1 >= k.size()) return k.back();
    const double theta = pos - static_cast<double>(i);
    return (1.0 - theta) * k[i] + theta * k[i + 1];
}

double RiccatiCurves::k1_at(double t) const { return interpolate(k1, t); }
double RiccatiCurves::k2_at(double t) const { return interpolate(k2, t); }
double RiccatiCurves::k3_at(double t) const { return interpolate(k3, t); }

std::array<double, 3> RiccatiCurves::derivative_at(double t) const {
    return {interpolate(k1p, t), interpolate(k2p, t), interpolate(k3p, t)};
}

void RiccatiCurves::to_csv(const std::string& path) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) rows.push_back({s[i], k1[i], k2[i], k3[i]});
    csv::write(path, {"s", "k1", "k2", "k3"}, rows);
}

RiccatiCurves riccati_solve(double sigma, double jump_second_moment, double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("riccati_solve: need dt > 0, T > 0");
    if (jump_second_moment < 0.0)
        throw std::invalid_argument("riccati_solve: jump_second_moment must be >= 0");
    const auto K = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / dt)));
    const double h = T / static_cast<double>(K);

    RiccatiCurves curves;
    curves.T = T;
    curves.dt = h;
    curves.sigma_eff_sq = sigma * sigma + jump_second_moment;
    curves.s.resize(K + 1);
    curves.k1.resize(K + 1);
    curves.k2.resize(K + 1);
    curves.k3.resize(K + 1);
    curves.k1p.resize(K + 1);
    curves.k2p.resize(K + 1);
    curves.k3p.resize(K + 1);
    for (std::size_t i = 0; i <= K; ++i) curves.s[i] = h * static_cast<double>(i);

    // Terminal data, integrated backward; in tau = T - s the system is
    // y' = -rhs(y), advanced by classic RK4.
    double k1 = -0.5, k2 = 0.0, k3 = 0.0;
    const double sig2 = curves.sigma_eff_sq;
    const auto store = [&](std::size_t i) {
        curves.k1[i] = k1;
        curves.k2[i] = k2;
        curves.k3[i] = k3;
        const auto d = riccati_rhs(k1, k2, k3, sig2);
        curves.k1p[i] = d[0];
        curves.k2p[i] = d[1];
        curves.k3p[i] = d[2];
    };
    store(K);
    for (std::size_t step = K; step-- > 0;) {
        const auto f1 = riccati_rhs(k1, k2, k3, sig2);
        const auto f2 = riccati_rhs(k1 - 0.5 * h * f1[0], k2 - 0.5 * h * f1[1],
                                    k3 - 0.5 * h * f1[2], sig2);
        const auto f3 = riccati_rhs(k1 - 0.5 * h * f2[0], k2 - 0.5 * h * f2[1],
                                    k3 - 0.5 * h * f2[2], sig2);
        const auto f4 = riccati_rhs(k1 - h * f3[0], k2 - h * f3[1], k3 - h * f3[2], sig2);
        k1 -= h / 6.0 * (f1[0] + 2.0 * f2[0] + 2.0 * f3[0] + f4[0]);
        k2 -= h / 6.0 * (f1[1] + 2.0 * f2[1] + 2.0 * f3[1] + f4[1]);
        k3 -= h / 6.0 * (f1[2] + 2.0 * f2[2] + 2.0 * f3[2] + f4[2]);
        if (std::abs(k1) > kBlowupGuard || std::abs(k2) > kBlowupGuard || std::abs(k3) > kBlowupGuard)
            throw std::runtime_error("riccati_solve: blow-up at s=" +
                                     csv::format_double(curves.s[step]));
        store(step);
    }
    return curves;
}

ControlPolicy lq_feedback(const RiccatiCurves& curves) {
    auto shared = std::make_shared<RiccatiCurves>(curves);
    return ControlPolicy(
        [shared](double t, double x, const LawView& law) {
            const double k1 = shared->k1_at(t);
            const double k2 = shared->k2_at(t);
            const double k3 = shared->k3_at(t);
            return (2.0 * k1 + k2) * x + (k2 + 2.0 * k3) * law.pairing(TestPolynomial::identity());
        },
        -1e9, 1e9);
}

CylindricalValueFunction lq_value(const RiccatiCurves& curves) {
    auto shared = std::make_shared<RiccatiCurves>(curves);
    auto value = [shared](double s, double x, std::span<const double> z) {
        return shared->k1_at(s) * x * x + shared->k2_at(s) * x * z[0] +
               shared->k3_at(s) * z[0] * z[0];
    };
    auto ds = [shared](double s, double x, std::span<const double> z) {
        const auto d = shared->derivative_at(s);
        return d[0] * x * x + d[1] * x * z[0] + d[2] * z[0] * z[0];
    };
    auto dx = [shared](double s, double x, std::span<const double> z) {
        return 2.0 * shared->k1_at(s) * x + shared->k2_at(s) * z[0];
    };
    auto dxx = [shared](double s, double, std::span<const double>) {
        return 2.0 * shared->k1_at(s);
    };
    auto dz = [shared](double s, double x, std::span<const double> z, std::size_t) {
        return shared->k2_at(s) * x + 2.0 * shared->k3_at(s) * z[0];
    };
    return CylindricalValueFunction({TestPolynomial::identity()}, std::move(value), std::move(ds),
                                    std::move(dx), std::move(dxx), std::move(dz));
}

RunningCost lq_running_cost() {
    return RunningCost{
        [](double, double, const LawView&, double u) { return -0.5 * u * u; },
        [](double x, const LawView&) { return -0.5 * x * x; },
    };
}

CoefficientModel lq_model(double sigma, double gamma0_scale) {
    return CoefficientModel(
        [](double, double, const LawView&, double u) { return u; },
        [sigma](double, double, const LawView& law, double) { return sigma * law.mean(); },
        [gamma0_scale](double, const LawView& law, double, double zeta) {
            return gamma0_scale * zeta * law.mean();
        });
}

// Consumption -----------------------------------------------------------------

ConsumptionSolution::ConsumptionSolution(double theta, double T, std::function<double(double)> rho,
                                         double quad_dt)
    : theta_(theta), T_(T), rho_(std::move(rho)), quad_dt_(quad_dt) {
    if (!(theta_ > 0.0)) throw std::invalid_argument("ConsumptionSolution: theta must be > 0");
    if (!(T_ > 0.0)) throw std::invalid_argument("ConsumptionSolution: T must be > 0");
    if (!(quad_dt_ > 0.0)) throw std::invalid_argument("ConsumptionSolution: quad_dt must be > 0");
    if (!rho_) throw std::invalid_argument("ConsumptionSolution: rho must be set");
}

double ConsumptionSolution::kappa0(double s) const {
    if (s < -1e-9 || s > T_ + 1e-9)
        throw std::domain_error("ConsumptionSolution: s outside [0, T]");
    if (s >= T_) return 0.0;
    const auto integrand = [this](double r) {
        return 1.0 + std::log(kappa1(r)) - rho_(r) * kappa1(r);
    };
    return -simpson(integrand, s, T_, quad_dt_);
}

void ConsumptionSolution::to_csv(const std::string& path, std::size_t samples) const {
    if (samples < 2) samples = 2;
    std::vector<std::vector<double>> rows;
    rows.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = T_ * static_cast<double>(i) / static_cast<double>(samples - 1);
        rows.push_back({s, kappa0(s), kappa1(s), c_hat(s)});
    }
    csv::write(path, {"s", "k0", "k1", "c_hat"}, rows);
}

ConsumptionSolution consumption_solution(double theta, double T,
                                         std::function<double(double)> rho, double quad_dt) {
    return ConsumptionSolution(theta, T, std::move(rho), quad_dt);
}

ControlPolicy consumption_policy(const ConsumptionSolution& sol) {
    const double theta = sol.theta();
    const double T = sol.T();
    return ControlPolicy(
        [theta, T](double t, double, const LawView&) {
            if (t < -1e-9 || t > T + 1e-9)
                throw std::domain_error("consumption_policy: t outside [0, T]");
            return 1.0 / (theta + T - t);
        },
        1e-12, 1e12);
}

double consumption_objective(const ConsumptionSolution& sol,
                             const std::function<double(double)>& c, double x0, double quad_dt) {
    if (!(x0 > 0.0)) throw std::domain_error("consumption_objective: x0 must be > 0");
    if (!(quad_dt > 0.0)) throw std::invalid_argument("consumption_objective: quad_dt must be > 0");
    const double T = sol.T();
    auto n = static_cast<std::size_t>(std::ceil(T / quad_dt));
    if (n < 2) n = 2;
    if (n % 2 == 1) ++n;
    const double h = T / static_cast<double>(n);

    // Mean dynamics M' = (rho - c) M by RK4, with ln(c M) accumulated by
    // Simpson on the same nodes.
    const auto slope = [&](double t, double m) { return (sol.rho(t) - c(t)) * m; };
    double M = x0;
    double acc = std::log(c(0.0) * M);  // Simpson end weight handled below
    for (std::size_t i = 0; i < n; ++i) {
        const double t = h * static_cast<double>(i);
        const double f1 = slope(t, M);
        const double f2 = slope(t + 0.5 * h, M + 0.5 * h * f1);
        const double f3 = slope(t + 0.5 * h, M + 0.5 * h * f2);
        const double f4 = slope(t + h, M + h * f3);
        M += h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        if (!(M > 0.0))
            throw std::runtime_error("consumption_objective: mean hit zero; c is inadmissible");
        const double t_next = h * static_cast<double>(i + 1);
        const double w = (i + 1 == n) ? 1.0 : (i % 2 == 0 ? 4.0 : 2.0);
        acc += w * std::log(c(t_next) * M);
    }
    const double integral = acc * h / 3.0;
    return integral + sol.theta() * std::log(M);
}

ConsumptionEvaluation consumption_value_and_objective(const ConsumptionSolution& sol, double x0,
                                                      double quad_dt) {
    if (!(x0 > 0.0))
        throw std::domain_error("consumption_value_and_objective: x0 must be > 0");
    ConsumptionEvaluation out;
    out.value = sol.kappa0(0.0) + sol.kappa1(0.0) * std::log(x0);
    out.objective =
        consumption_objective(sol, [&sol](double t) { return sol.c_hat(t); }, x0, quad_dt);
    return out;
}

RunningCost consumption_running_cost(double theta) {
    return RunningCost{
        [](double, double, const LawView& law, double u) {
            const double z = law.pairing(TestPolynomial::identity());
            return std::log(u * z);
        },
        [theta](double, const LawView& law) {
            return theta * std::log(law.pairing(TestPolynomial::identity()));
        },
    };
}

CoefficientModel consumption_model(std::function<double(double)> rho, double sigma0,
                                   double gamma0_scale) {
    if (!rho) throw std::invalid_argument("consumption_model: rho must be set");
    return CoefficientModel(
        [rho](double t, double, const LawView& law, double u) { return (rho(t) - u) * law.mean(); },
        [sigma0](double, double, const LawView& law, double) { return sigma0 * law.mean(); },
        [gamma0_scale](double, const LawView& law, double, double zeta) {
            return gamma0_scale * zeta * law.mean();
        });
}

}  // namespace mvjump
