// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace delayctl {

/// Clamped-affine response f(I) = clamp(base + slope I, lo, hi) of a delay integral.
struct ClampedAffine {
    double base = 0.0;
    double slope = 0.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    [[nodiscard]] double operator()(double I) const { return std::clamp(base + slope * I, lo, hi); }
    [[nodiscard]] double sup_abs() const {
        if (slope == 0.0) return std::abs(std::clamp(base, lo, hi));
        return std::max(std::abs(lo), std::abs(hi));
    }
    [[nodiscard]] double lower() const { return slope == 0.0 ? std::clamp(base, lo, hi) : lo; }
    [[nodiscard]] double upper() const { return slope == 0.0 ? std::clamp(base, lo, hi) : hi; }
};

/// Power utility z^gamma / gamma on [z_floor, inf), continued by its tangent below z_floor.
struct FlooredPowerUtility {
    double gamma = 0.5;
    double z_floor = 1e-3;

    [[nodiscard]] double operator()(double z) const {
        if (z >= z_floor) return std::pow(z, gamma) / gamma;
        return std::pow(z_floor, gamma) / gamma + std::pow(z_floor, gamma - 1.0) * (z - z_floor);
    }
    /// K with |g(z)| <= K (1 + |z|) for all z.
    [[nodiscard]] double growth_constant() const {
        const double zf = z_floor;
        return std::max({1.0 / gamma, std::pow(zf, gamma) * (1.0 + 1.0 / gamma), std::pow(zf, gamma - 1.0)});
    }
};

struct MertonParams {
    double r = 0.01;
    ClampedAffine mu{0.07, 0.0};
    ClampedAffine nu{0.3, 0.0, 0.05, 1.0};  // lo is nu_min > 0
    KernelPreset a1;                        // acts on the stock price only
    KernelPreset a2;
    FlooredPowerUtility utility;
    double rho = 0.1;
    int control_count = 11;  // uniform grid on [0, 1]
    double audit_radius = 10.0;
};

/// State (s, z): stock price and wealth, one Brownian factor, control = stock fraction u in [0, 1].
/// Cost l = -g(z) (maximizing expected discounted utility).
[[nodiscard]] inline ProblemSpec build_merton(const MertonParams& p, const SegmentGrid& grid) {
    if (!(p.r >= 0.0)) throw ValidationError("merton: r must be non-negative");
    if (!(p.nu.lower() > 0.0)) throw ValidationError("merton: nu must be bounded below by a positive nu_min");
    if (!(p.utility.gamma > 0.0 && p.utility.gamma < 1.0)) throw ValidationError("merton: gamma must lie in (0, 1)");
    if (!(p.utility.z_floor > 0.0)) throw ValidationError("merton: z_floor must be positive");
    if (p.control_count < 2) throw ValidationError("merton: need at least two controls");

    ProblemSpec s;
    s.n = 2;
    s.q = 1;
    s.p = 1;
    s.grid = grid;
    s.family = "merton";
    s.state_names = {"s", "z"};
    s.rho = p.rho;

    KernelPreset k1 = p.a1, k2 = p.a2;
    k1.selector = (Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished();
    k2.selector = k1.selector;
    s.a1 = Kernel::from_preset(k1, grid);
    s.a2 = Kernel::from_preset(k2, grid);

    const double r = p.r;
    const ClampedAffine mu = p.mu, nu = p.nu;
    const FlooredPowerUtility g = p.utility;
    s.dynamics.drift = [r, mu](const Eigen::VectorXd& x, const Eigen::VectorXd& I, const Eigen::VectorXd& u) {
        const double m = mu(I[0]);
        Eigen::VectorXd b(2);
        b << m * x[0], r * x[1] + (m - r) * u[0] * x[1];
        return b;
    };
    s.dynamics.diffusion = [nu](const Eigen::VectorXd& x, const Eigen::VectorXd& I, const Eigen::VectorXd& u) {
        const double v = nu(I[0]);
        Eigen::MatrixXd sig(2, 1);
        sig << v * x[0], v * u[0] * x[1];
        return sig;
    };
    s.dynamics.cost = [g](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return -g(x[1]); };
    s.dynamics.diffusion_depends_on_control = true;
    s.dynamics.deterministic = false;

    for (int i = 0; i < p.control_count; ++i)
        s.controls.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(i) / (p.control_count - 1)));

    // Growth: |b0| <= max(sup|mu|, r + sup|mu - r|) |x|, |sigma0| <= sup nu |x|.
    const double mu_gap = std::max(std::abs(mu.upper() - r), std::abs(mu.lower() - r));
    const double C = std::max({mu.sup_abs(), r + mu_gap, nu.sup_abs()});
    // Lipschitz on |x|, |I| <= R: the products mu(I) s and nu(I) u z pick up |slope| R.
    const double R = p.audit_radius;
    const double Lb = mu.sup_abs() + mu_gap + r + 2.0 * std::abs(mu.slope) * R;
    const double Ls = 2.0 * nu.sup_abs() + 2.0 * std::abs(nu.slope) * R;
    s.constants.C = C;
    s.constants.L = std::max(Lb, Ls);
    s.constants.K = g.growth_constant();
    s.constants.m_cost = 1.0;
    s.constants.lambda_R.reset();  // sigma0 sigma0^T has rank one
    s.constants.cost_lipschitz = false;
    s.constants.audit_radius = R;

    s.parameters = {{"r", r},           {"mu_base", mu.base},   {"mu_slope", mu.slope}, {"mu_min", mu.lo},
                    {"mu_max", mu.hi},  {"nu_base", nu.base},   {"nu_slope", nu.slope}, {"nu_min", nu.lo},
                    {"nu_max", nu.hi},  {"gamma", g.gamma},     {"z_floor", g.z_floor}, {"rho", p.rho},
                    {"controls", static_cast<double>(p.control_count)}};
    s.validate();
    return s;
}

/// Classical constant-coefficient Merton benchmark (no delay, power utility).
struct MertonOracle {
    double u_star = 0.0;
    double beta = 0.0;         // growth rate of E[z(t)^gamma] under u_star
    double coefficient = 0.0;  // sup value = coefficient * z0^gamma
    [[nodiscard]] double value(double z0, double gamma) const { return coefficient * std::pow(z0, gamma); }
};

/// beta(u) = gamma (r + (mu - r) u) - gamma (1 - gamma) nu^2 u^2 / 2
[[nodiscard]] inline double merton_beta(double r, double mu, double nu, double gamma, double u) {
    return gamma * (r + (mu - r) * u) - 0.5 * gamma * (1.0 - gamma) * nu * nu * u * u;
}

[[nodiscard]] inline MertonOracle merton_classical_oracle(double r, double mu, double nu, double gamma, double rho) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("merton oracle: gamma must lie in (0, 1)");
    if (!(nu > 0.0)) throw ValidationError("merton oracle: nu must be positive");
    MertonOracle o;
    o.u_star = std::clamp((mu - r) / ((1.0 - gamma) * nu * nu), 0.0, 1.0);
    o.beta = merton_beta(r, mu, nu, gamma, o.u_star);
    if (!(rho > o.beta))
        throw InadmissibleDiscountError("merton oracle: rho must exceed sup_u beta(u) = " + std::to_string(o.beta));
    o.coefficient = 1.0 / (gamma * (rho - o.beta));
    return o;
}

/// E int_0^T e^{-rho t} z(t)^gamma / gamma dt under a constant proportion u.
[[nodiscard]] inline double merton_constant_control_value(double r, double mu, double nu, double gamma, double rho,
                                                          double u, double z0, double T) {
    const double gap = rho - merton_beta(r, mu, nu, gamma, u);
    return std::pow(z0, gamma) / gamma * (1.0 - std::exp(-gap * T)) / gap;
}

}  // namespace delayctl
