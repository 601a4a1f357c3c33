// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace delayctl {

/// Goodwill y with forgetting a0 <= 0, delayed forgetting kernel a1 <= 0,
/// effectiveness c0 >= 0 and additive noise sigma0 > 0 (sigma0 = 0 gives the
/// deterministic model).
/// Cost l(x, u) = h u^2 - (g_slope x - g_quad x^2 / 2).
struct AdvertisingParams {
    double a0 = -0.5;
    double c0 = 1.0;
    KernelPreset a1{"affine_ramp", -1.0};
    double sigma0 = 0.2;
    double h_coef = 0.5;
    double g_slope = 1.0;
    double g_quad = 0.0;
    double rho = 1.0;
    double u_max = 1.0;
    int control_count = 11;
};

[[nodiscard]] inline ProblemSpec build_advertising(const AdvertisingParams& p, const SegmentGrid& grid) {
    if (!(p.a0 <= 0.0)) throw ValidationError("advertising: a0 must be <= 0");
    if (!(p.c0 >= 0.0)) throw ValidationError("advertising: c0 must be >= 0");
    if (!(p.sigma0 >= 0.0)) throw ValidationError("advertising: sigma0 must be >= 0");
    if (!(p.u_max > 0.0)) throw ValidationError("advertising: u_max must be positive");
    if (!(p.h_coef >= 0.0) || !(p.g_quad >= 0.0))
        throw ValidationError("advertising: h must be convex and g concave (h_coef, g_quad >= 0)");
    if (p.control_count < 1) throw ValidationError("advertising: need at least one control");

    ProblemSpec s;
    s.n = s.q = s.p = 1;
    s.grid = grid;
    s.family = "advertising";
    s.rho = p.rho;
    KernelPreset k = p.a1;
    k.selector = Eigen::MatrixXd::Ones(1, 1);
    s.a1 = Kernel::from_preset(k, grid);
    for (int j = 0; j < grid.size(); ++j)
        if (s.a1.at_node(j)(0, 0) > 1e-14) throw ValidationError("advertising: kernel a1 must be <= 0");
    s.a2 = Kernel::zero(grid, 1, 1);

    const double a0 = p.a0, c0 = p.c0, sig = p.sigma0, h = p.h_coef, gs = p.g_slope, gq = p.g_quad;
    s.dynamics.drift = [a0, c0](const Eigen::VectorXd& x, const Eigen::VectorXd& I, const Eigen::VectorXd& u) {
        return Eigen::VectorXd::Constant(1, a0 * x[0] + I[0] + c0 * u[0]);
    };
    s.dynamics.diffusion = [sig](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, sig);
    };
    s.dynamics.cost = [h, gs, gq](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return h * u[0] * u[0] - (gs * x[0] - 0.5 * gq * x[0] * x[0]);
    };
    s.dynamics.diffusion_depends_on_control = false;
    s.dynamics.deterministic = (sig == 0.0);

    if (p.control_count == 1)
        s.controls.push_back(Eigen::VectorXd::Zero(1));
    else
        for (int i = 0; i < p.control_count; ++i)
            s.controls.push_back(Eigen::VectorXd::Constant(1, p.u_max * i / (p.control_count - 1)));

    s.constants.C = std::max({std::abs(a0), 1.0, c0 * p.u_max, sig});
    s.constants.L = std::max(std::abs(a0), 1.0);
    s.constants.m_cost = gq > 0.0 ? 2.0 : 1.0;
    s.constants.K = h * p.u_max * p.u_max + gs + 0.5 * gq;
    if (sig > 0.0) s.constants.lambda_R = sig * sig;
    s.constants.cost_lipschitz = (gq == 0.0);

    s.parameters = {{"a0", a0},       {"c0", c0},         {"kernel_scale", p.a1.scale}, {"sigma0", sig},
                    {"h_coef", h},    {"g_slope", gs},    {"g_quad", gq},               {"rho", p.rho},
                    {"u_max", p.u_max}, {"controls", static_cast<double>(p.control_count)}};
    s.validate();
    return s;
}

}  // namespace delayctl
