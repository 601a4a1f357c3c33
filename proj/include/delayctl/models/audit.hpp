// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace delayctl {

/// Worst observed ratio of each sampled quantity to its declared bound
/// (<= 1 means the declaration held on every probe).
struct AuditReport {
    double growth_b = 0.0;     // |b0| / (C (1 + |x| + |I|))
    double growth_sigma = 0.0; // |sigma0| / (C (1 + |x| + |I|))
    double lipschitz_b = 0.0;  // |b0(2) - b0(1)| / (L (|dx| + |dI|))
    double lipschitz_sigma = 0.0;
    double growth_cost = 0.0;  // |l| / (K (1 + |x|^m))
    double ellipticity = 0.0;  // lambda_R / lambda_min(sigma0 sigma0^T), when declared
    std::size_t probes = 0;
    std::vector<std::string> violations;
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

namespace detail {

inline Eigen::VectorXd sample_ball(std::mt19937_64& rng, int dim, double radius) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = N01(rng);
    const double r = radius * std::pow(U01(rng), 1.0 / dim);
    return v.norm() > 0.0 ? Eigen::VectorXd(v * (r / v.norm())) : v;
}

/// Spectral norm, matching the operator-norm convention of the growth bounds.
inline double op_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

}  // namespace detail

/// Samples the growth and Lipschitz bounds on b0 and sigma0, the growth bound
/// on l and, when declared, the ellipticity floor, over |x|, |I| <= audit_radius.
[[nodiscard]] inline AuditReport audit_hypotheses(const ProblemSpec& spec, std::size_t probes, std::uint64_t seed,
                                                  double slack = 1e-9) {
    const auto& c = spec.constants;
    const double R = c.audit_radius;
    const int h = spec.a1.rows();
    const int h2 = spec.a2.rows();
    std::mt19937_64 rng(seed);
    AuditReport r;
    r.probes = probes;
    for (std::size_t k = 0; k < probes; ++k) {
        const Eigen::VectorXd& u = spec.controls[k % spec.controls.size()];
        const Eigen::VectorXd x1 = detail::sample_ball(rng, spec.n, R);
        const Eigen::VectorXd x2 = detail::sample_ball(rng, spec.n, R);
        const Eigen::VectorXd i1 = detail::sample_ball(rng, h, R);
        const Eigen::VectorXd i2 = detail::sample_ball(rng, h, R);
        const Eigen::VectorXd j1 = detail::sample_ball(rng, h2, R);
        const Eigen::VectorXd j2 = detail::sample_ball(rng, h2, R);

        const Eigen::VectorXd b1 = spec.drift(x1, i1, u), b2 = spec.drift(x2, i2, u);
        const Eigen::MatrixXd s1 = spec.diffusion(x1, j1, u), s2 = spec.diffusion(x2, j2, u);
        r.growth_b = std::max(r.growth_b, b1.norm() / (c.C * (1.0 + x1.norm() + i1.norm())));
        r.growth_sigma = std::max(r.growth_sigma, detail::op_norm(s1) / (c.C * (1.0 + x1.norm() + j1.norm())));
        const double db = (x2 - x1).norm() + (i2 - i1).norm();
        const double ds = (x2 - x1).norm() + (j2 - j1).norm();
        if (db > 0.0) r.lipschitz_b = std::max(r.lipschitz_b, (b2 - b1).norm() / (c.L * db));
        if (ds > 0.0) r.lipschitz_sigma = std::max(r.lipschitz_sigma, detail::op_norm(s2 - s1) / (c.L * ds));
        r.growth_cost = std::max(r.growth_cost,
                                 std::abs(spec.cost(x1, u)) / (c.K * (1.0 + std::pow(x1.norm(), c.m_cost))));
        if (c.lambda_R) {
            const Eigen::MatrixXd a = s1 * s1.transpose();
            const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff();
            r.ellipticity = std::max(r.ellipticity, lmin > 0.0 ? *c.lambda_R / lmin : INFINITY);
        }
    }
    auto flag = [&](double v, const char* what) {
        if (v > 1.0 + slack) r.violations.push_back(std::string(what) + " exceeded by factor " + std::to_string(v));
    };
    flag(r.growth_b, "growth of b0 (C)");
    flag(r.growth_sigma, "growth of sigma0 (C)");
    flag(r.lipschitz_b, "Lipschitz bound of b0 (L)");
    flag(r.lipschitz_sigma, "Lipschitz bound of sigma0 (L)");
    flag(r.growth_cost, "growth of l (K, m)");
    if (c.lambda_R) flag(r.ellipticity, "ellipticity floor (lambda_R)");
    return r;
}

}  // namespace delayctl
