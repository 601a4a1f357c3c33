// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/numerics.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/lift/mild.hpp"
#include "delayctl/operators/lifted_ops.hpp"
#include "delayctl/operators/spectral.hpp"
#include "delayctl/sdde/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace delayctl {

/// Spectral |B| for the problem grid.
[[nodiscard]] inline double b_operator_norm(const ProblemSpec& spec) {
    return spectral_B(assemble_B(spec.grid, spec.n)).largest();
}

struct ContractionProbe {
    double lhs = 0.0;        // Monte Carlo mean of |X(r) - Y(r)|_{-1}^2
    double lhs_stderr = 0.0;
    double rhs = 0.0;        // C(r) |x - y|_{-1}^2
    double factor = 1.0;     // C(r) = exp((2C + C^2 |B|) r)
    double max_ratio = 0.0;  // largest pathwise |X(r) - Y(r)|^2_{-1} / |x - y|^2_{-1}

    [[nodiscard]] bool holds(double sigmas = 2.0) const { return lhs <= rhs + sigmas * lhs_stderr; }
};

/// E|X(r) - Y(r)|_{-1}^2 for two initial states driven by the same noise and
/// control, against the bound C(r)|x - y|_{-1}^2 built from the declared C.
[[nodiscard]] inline ContractionProbe contraction_probe(const ProblemSpec& spec, const LiftedState& x,
                                                        const LiftedState& y, const ControlProcess& ctrl, double r,
                                                        double dt, std::size_t paths, std::uint64_t seed,
                                                        std::optional<double> b_norm = std::nullopt) {
    if (paths < 1) throw ValidationError("contraction_probe: need at least one path");
    const SegmentGrid& g = spec.grid;
    const double C = spec.constants.C;
    const double bn = b_norm ? *b_norm : b_operator_norm(spec);
    const double d0 = std::pow(minus_one_norm(resample_state(x, g) - resample_state(y, g)), 2);

    ContractionProbe out;
    out.factor = std::exp((2.0 * C + C * C * bn) * r);
    out.rhs = out.factor * d0;
    const std::size_t n_paths = spec.dynamics.deterministic ? 1 : paths;
    std::vector<double> sq(n_paths);
    parallel_for(n_paths, [&](std::size_t p) {
        BrownianDriver dx(seed, p, spec.q, dt), dy(seed, p, spec.q, dt);
        const SddePath px = simulate_sdde(spec, x, ctrl, r, dt, dx);
        const SddePath py = simulate_sdde(spec, y, ctrl, r, dt, dy);
        sq[p] = std::pow(minus_one_norm(lift_history(px, r, g) - lift_history(py, r, g)), 2);
    });
    const auto st = sample_stats(sq);
    out.lhs = st.mean;
    out.lhs_stderr = st.std_error;
    if (d0 > 0.0) out.max_ratio = *std::max_element(sq.begin(), sq.end()) / d0;
    return out;
}

/// Smallest constants making the coefficient bounds hold on the given states:
///   |b~(x,u) - b~(y,u)|_X <= c_drift |x - y|_{-1}, b~ = b + (x0, 0)
///   |sigma(x,u) - sigma(y,u)|_HS <= c_diffusion |x - y|_{-1}
/// over all pairs and all controls. Pairs with |x - y|_{-1} below
/// 1e-12 |x - y|_X (grid-scale null directions of B) are skipped.
struct CoefficientFit {
    double c_drift = 0.0;
    double c_diffusion = 0.0;
    std::size_t pairs = 0;
    std::size_t skipped = 0;
};

[[nodiscard]] inline CoefficientFit coefficient_lipschitz_fit(const ProblemSpec& spec,
                                                              const std::vector<LiftedState>& states) {
    const SegmentGrid& g = spec.grid;
    std::vector<LiftedState> xs;
    xs.reserve(states.size());
    std::vector<Eigen::VectorXd> i1, i2;
    for (const auto& s : states) {
        xs.push_back(resample_state(s, g));
        i1.push_back(kernel_convolve(spec.a1, xs.back().tail()));
        i2.push_back(kernel_convolve(spec.a2, xs.back().tail()));
    }
    CoefficientFit fit;
    for (std::size_t a = 0; a < xs.size(); ++a)
        for (std::size_t b = a + 1; b < xs.size(); ++b) {
            const LiftedState diff = xs[a] - xs[b];
            const double dm1 = minus_one_norm(diff);
            if (!(dm1 > 1e-12 * lifted_norm(diff))) {
                ++fit.skipped;
                continue;
            }
            ++fit.pairs;
            for (const auto& u : spec.controls) {
                const Eigen::VectorXd db = spec.drift(xs[a].head(), i1[a], u) + xs[a].head() -
                                           spec.drift(xs[b].head(), i1[b], u) - xs[b].head();
                const Eigen::MatrixXd ds = spec.diffusion(xs[a].head(), i2[a], u) - spec.diffusion(xs[b].head(), i2[b], u);
                fit.c_drift = std::max(fit.c_drift, db.norm() / dm1);
                fit.c_diffusion = std::max(fit.c_diffusion, ds.norm() / dm1);
            }
        }
    return fit;
}

/// tail[N] = sup_u Tr[sigma sigma^* B Q_N] at x, for N = 0..dim. With B f_i =
/// lambda_i f_i and sigma w = (sigma0 w, 0) this is
/// sum_{i >= N} lambda_i |sigma0^T f_i,head|^2, nonincreasing and zero at N = dim.
[[nodiscard]] inline Eigen::VectorXd trace_tail_profile(const ProblemSpec& spec, const SpectralDecomposition& B,
                                                        const LiftedState& x) {
    if (B.grid() != spec.grid || B.state_dim() != spec.n) throw DimensionError("trace_tail_profile: grid mismatch");
    const LiftedState xs = resample_state(x, spec.grid);
    const Eigen::VectorXd i2 = kernel_convolve(spec.a2, xs.tail());
    const int dim = B.dim();
    const int n = spec.n;
    Eigen::VectorXd best = Eigen::VectorXd::Zero(dim + 1);
    for (const auto& u : spec.controls) {
        const Eigen::MatrixXd sig = spec.diffusion(xs.head(), i2, u);
        Eigen::VectorXd tail(dim + 1);
        tail[dim] = 0.0;
        for (int i = dim - 1; i >= 0; --i) {
            const Eigen::VectorXd fh = B.eigenvectors().col(i).head(n);
            tail[i] = tail[i + 1] + std::max(B.eigenvalues()[i], 0.0) * (sig.transpose() * fh).squaredNorm();
        }
        best = best.cwiseMax(tail);
    }
    return best;
}

}  // namespace delayctl
