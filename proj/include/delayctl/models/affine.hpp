// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace delayctl {

/// Minimal family with every hypothesis knob exposed, n = q, p = 1:
///   b0    = b_const + b_x x + b_i I + b_u u        (componentwise, h = n)
///   sigma = diag(max(s_floor, s_const + s_x x_i))
///   l     = c_x |x|^m + c_u u^2
struct AffineTestParams {
    int n = 1;
    double b_const = 0.0, b_x = 0.0, b_i = 0.0, b_u = 0.0;
    double s_const = 0.0, s_x = 0.0, s_floor = 0.0;
    double c_x = 0.0, c_u = 0.0, m_cost = 2.0;
    KernelPreset a1{"sine_bump", 1.0};
    KernelPreset a2{"zero", 0.0};
    double rho = 1.0;
    double u_max = 1.0;
    int control_count = 3;  // uniform grid on [-u_max, u_max]
};

[[nodiscard]] inline ProblemSpec build_affine_test(const AffineTestParams& p, const SegmentGrid& grid) {
    if (p.n < 1 || p.n > 4) throw ValidationError("affine_test: n must lie in [1, 4]");
    if (!(p.s_floor >= 0.0)) throw ValidationError("affine_test: s_floor must be >= 0");
    if (!(p.m_cost > 0.0)) throw ValidationError("affine_test: m_cost must be positive");
    if (!(p.c_x >= 0.0) || !(p.c_u >= 0.0)) throw ValidationError("affine_test: cost weights must be >= 0");
    if (p.control_count < 1) throw ValidationError("affine_test: need at least one control");

    const int n = p.n;
    ProblemSpec s;
    s.n = s.q = n;
    s.p = 1;
    s.grid = grid;
    s.family = "affine_test";
    s.rho = p.rho;
    KernelPreset k1 = p.a1, k2 = p.a2;
    k1.selector = Eigen::MatrixXd::Identity(n, n);
    k2.selector = Eigen::MatrixXd::Identity(n, n);
    s.a1 = Kernel::from_preset(k1, grid);
    s.a2 = Kernel::from_preset(k2, grid);

    const AffineTestParams q = p;
    s.dynamics.drift = [q](const Eigen::VectorXd& x, const Eigen::VectorXd& I, const Eigen::VectorXd& u) {
        return Eigen::VectorXd((q.b_const + q.b_x * x.array() + q.b_i * I.array() + q.b_u * u[0]).matrix());
    };
    s.dynamics.diffusion = [q](const Eigen::VectorXd& x, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(x.size(), x.size());
        for (int i = 0; i < x.size(); ++i) sig(i, i) = std::max(q.s_floor, q.s_const + q.s_x * x[i]);
        return sig;
    };
    s.dynamics.cost = [q](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return q.c_x * std::pow(x.norm(), q.m_cost) + q.c_u * u[0] * u[0];
    };
    s.dynamics.diffusion_depends_on_control = false;
    s.dynamics.deterministic = (p.s_floor == 0.0 && p.s_const <= 0.0 && p.s_x == 0.0);

    if (p.control_count == 1)
        s.controls.push_back(Eigen::VectorXd::Zero(1));
    else
        for (int i = 0; i < p.control_count; ++i)
            s.controls.push_back(Eigen::VectorXd::Constant(1, -p.u_max + 2.0 * p.u_max * i / (p.control_count - 1)));

    const double rn = std::sqrt(static_cast<double>(n));
    s.constants.C = std::max({rn * std::abs(p.b_const) + std::abs(p.b_u) * p.u_max * rn, std::abs(p.b_x), std::abs(p.b_i),
                              rn * std::max(p.s_floor, std::abs(p.s_const)), std::abs(p.s_x), 1e-12});
    s.constants.L = std::max({std::abs(p.b_x), std::abs(p.b_i), std::abs(p.s_x), 1e-12});
    s.constants.K = std::max({p.c_x, p.c_u * p.u_max * p.u_max, 1e-12});
    s.constants.m_cost = p.m_cost;
    if (p.s_floor > 0.0) s.constants.lambda_R = p.s_floor * p.s_floor;
    s.constants.cost_lipschitz = (p.c_x == 0.0 || p.m_cost == 1.0);

    s.parameters = {{"n", static_cast<double>(n)}, {"b_const", p.b_const}, {"b_x", p.b_x}, {"b_i", p.b_i},
                    {"b_u", p.b_u}, {"s_const", p.s_const}, {"s_x", p.s_x}, {"s_floor", p.s_floor},
                    {"c_x", p.c_x}, {"c_u", p.c_u}, {"m_cost", p.m_cost}, {"rho", p.rho}, {"u_max", p.u_max},
                    {"controls", static_cast<double>(p.control_count)}};
    s.validate();
    return s;
}

}  // namespace delayctl
