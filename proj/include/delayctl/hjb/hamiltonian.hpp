// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/operators/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace delayctl {

struct HamiltonianValue {
    double value = 0.0;
    std::size_t argmax = 0;  // index into the control set; ties go to the lowest index
};

/// Integrand -b0.p0 - Tr(sigma0 sigma0^T Z00)/2 - l for one control, given the delay integrals.
[[nodiscard]] inline double hamiltonian_integrand(const ProblemSpec& spec, const Eigen::VectorXd& x0,
                                                  const Eigen::VectorXd& i1, const Eigen::VectorXd& i2,
                                                  const Eigen::VectorXd& u, const Eigen::VectorXd& p0,
                                                  const Eigen::MatrixXd& Z00) {
    const Eigen::MatrixXd sig = spec.diffusion(x0, i2, u);
    return -spec.drift(x0, i1, u).dot(p0) - 0.5 * (sig.transpose() * Z00 * sig).trace() - spec.cost(x0, u);
}

/// -x0.p0 + max_u { -b0.p0 - Tr(sigma0 sigma0^T Z00)/2 - l } with the delay
/// integrals already evaluated.
[[nodiscard]] inline HamiltonianValue hamiltonian_at(const ProblemSpec& spec, const Eigen::VectorXd& x0,
                                                     const Eigen::VectorXd& i1, const Eigen::VectorXd& i2,
                                                     const Eigen::VectorXd& p0, const Eigen::MatrixXd& Z00) {
    if (p0.size() != spec.n || Z00.rows() != spec.n || Z00.cols() != spec.n)
        throw DimensionError("hamiltonian: p0 / Z00 dimension mismatch");
    HamiltonianValue h{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t k = 0; k < spec.controls.size(); ++k) {
        const double v = hamiltonian_integrand(spec, x0, i1, i2, spec.controls[k], p0, Z00);
        if (v > h.value) h = {v, k};
    }
    h.value -= x0.dot(p0);
    return h;
}

[[nodiscard]] inline HamiltonianValue hamiltonian(const ProblemSpec& spec, const LiftedState& x,
                                                  const Eigen::VectorXd& p0, const Eigen::MatrixXd& Z00) {
    if (x.dim() != spec.n) throw DimensionError("hamiltonian: state dimension != n");
    if ((Z00 - Z00.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Z00.cwiseAbs().maxCoeff()))
        throw ValidationError("hamiltonian: Z00 must be symmetric");
    const LiftedState xs = x.grid() == spec.grid ? x : resample_state(x, spec.grid);
    return hamiltonian_at(spec, xs.head(), kernel_convolve(spec.a1, xs.tail()), kernel_convolve(spec.a2, xs.tail()),
                          p0, Z00);
}

/// Head-head block of B Q_N: sum_{i >= N} lambda_i f_i,head f_i,head^T.
[[nodiscard]] inline Eigen::MatrixXd bq_head_block(const SpectralDecomposition& B, int N) {
    if (N < 0 || N > B.dim()) throw ValidationError("bq_head_block: N out of range");
    const int n = B.state_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int i = N; i < B.dim(); ++i) {
        const Eigen::VectorXd f = B.eigenvectors().col(i).head(n);
        out += std::max(B.eigenvalues()[i], 0.0) * f * f.transpose();
    }
    return out;
}

}  // namespace delayctl
