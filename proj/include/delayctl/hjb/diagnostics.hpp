// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/numerics.hpp"
#include "delayctl/hjb/hamiltonian.hpp"
#include "delayctl/hjb/lag_chain.hpp"
#include "delayctl/hjb/solver.hpp"
#include "delayctl/hjb/value_field.hpp"
#include "delayctl/operators/lifted_ops.hpp"
#include "delayctl/sdde/brownian.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace delayctl {

/// rho V - (transport . grad V - y0 . D_{y0} V) + H~(z, D_{y0} V, D^2_{y0} V) at an interior
/// point. Transport moves each lag coordinate towards its successor at rate 1/D; the
/// y0 . D_{y0} V term is the head part of the generator that H~ carries as -x0.p0.
/// Derivatives are central differences at `stride` grid spacings; degenerate axes contribute nothing.
/// A stride above one damps the interpolation ripple a fine grid leaves in V.
[[nodiscard]] inline double hjb_residual(const LagChain& chain, const ValueField& V, const Eigen::VectorXd& z,
                                         int stride = 1) {
    if (stride < 1) throw ValidationError("hjb_residual: stride must be >= 1");
    const TensorGrid& g = V.grid;
    if (g.dim() != chain.dim() || z.size() != chain.dim()) throw DimensionError("hjb_residual: dimension mismatch");
    for (int k = 0; k < g.dim(); ++k) {
        const Axis& a = g.axis(k);
        if (a.degenerate()) continue;
        const double h = stride * a.spacing(), eps = 1e-9 * h;
        if (a.count < 2 * stride + 1 || z[k] < a.min + h - eps || z[k] > a.max - h + eps)
            throw DomainError("hjb_residual: point within one stencil of the boundary along " + a.name);
    }
    const int n = chain.n(), D = chain.dim();
    std::vector<double> h(static_cast<std::size_t>(D));
    for (int k = 0; k < D; ++k) h[static_cast<std::size_t>(k)] = stride * g.axis(k).spacing();
    const auto shifted = [&](int k, double sk, int l, double sl) {
        Eigen::VectorXd w = z;
        if (k >= 0) w[k] += sk * h[static_cast<std::size_t>(k)];
        if (l >= 0) w[l] += sl * h[static_cast<std::size_t>(l)];
        return V(w);
    };
    const double v0 = V(z);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(D);
    for (int k = 0; k < D; ++k)
        if (!g.axis(k).degenerate())
            grad[k] = (shifted(k, 1, -1, 0) - shifted(k, -1, -1, 0)) / (2.0 * h[static_cast<std::size_t>(k)]);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (g.axis(i).degenerate()) continue;
        const double hi = h[static_cast<std::size_t>(i)];
        Z(i, i) = (shifted(i, 1, -1, 0) - 2.0 * v0 + shifted(i, -1, -1, 0)) / (hi * hi);
        for (int j = i + 1; j < n; ++j) {
            if (g.axis(j).degenerate()) continue;
            const double hj = h[static_cast<std::size_t>(j)];
            Z(i, j) = Z(j, i) = (shifted(i, 1, j, 1) - shifted(i, 1, j, -1) - shifted(i, -1, j, 1) +
                                 shifted(i, -1, j, -1)) / (4.0 * hi * hj);
        }
    }
    double transport = 0.0;
    for (int k = n; k < D; ++k) transport += (z[k - n] - z[k]) / chain.step() * grad[k];
    const Eigen::VectorXd y0 = z.head(n);
    const HamiltonianValue H = hamiltonian_at(chain.spec(), y0, chain.integral(chain.a1(), z),
                                              chain.integral(chain.a2(), z), grad.head(n), Z);
    return chain.spec().rho * v0 - (transport - y0.dot(grad.head(n))) + H.value;
}

/// max(0, V(z) - (T V)(z)) at an arbitrary point, T the chain's Bellman operator with
/// the same Gauss-Hermite rule as the solver. Zero at converged nodes; off the nodes it
/// measures how far interpolated V overshoots its own one-step lookahead.
[[nodiscard]] inline double bellman_defect(const LagChain& chain, const ValueField& V, const Eigen::VectorXd& z,
                                           int gh_points = ValueIterationSettings{}.gh_points) {
    const detail::NoiseRule rule = detail::noise_rule(chain, gh_points);
    const double beta = chain.discount();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : chain.spec().controls) {
        double acc = chain.running_cost(z, u);
        for (std::size_t g = 0; g < rule.weights.size(); ++g) acc += beta * rule.weights[g] * V(chain.step(z, u, rule.increments[g]));
        best = std::min(best, acc);
    }
    return std::max(0.0, V(z) - best);
}

struct DppRow {
    std::size_t control = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct DppGap {
    double value = 0.0;      // V(x)
    double gap = 0.0;        // V(x) - min over constant controls
    double std_error = 0.0;  // of the minimizing control's estimate
    double grid_tolerance = 0.0;  // sum_k e^{-rho t_k} E[bellman_defect(Z_k)] along the minimizing control
    std::size_t best = 0;
    std::vector<DppRow> rows;
};

/// V(x) - min_u E[ sum_{t_k < tau} e^{-rho t_k} l D + e^{-rho tau} V(Z_tau) ] over constant
/// controls, on the chain started from the register of x. Controls share Brownian paths.
[[nodiscard]] inline DppGap dpp_gap(const LagChain& chain, const ValueField& V, const LiftedState& x, double tau,
                                    std::size_t paths, std::uint64_t seed) {
    if (!(tau >= 0.0)) throw ValidationError("dpp_gap: tau must be non-negative");
    const double D = chain.step();
    const double steps_d = tau / D;
    const long K = std::lround(steps_d);
    if (std::abs(steps_d - static_cast<double>(K)) > 1e-9 * std::max(1.0, steps_d))
        throw ValidationError("dpp_gap: tau must be a multiple of the chain step");
    const ProblemSpec& spec = chain.spec();
    if (spec.dynamics.deterministic) paths = 1;
    if (paths < 1) throw ValidationError("dpp_gap: need at least one path");
    const Eigen::VectorXd z0 = chain.register_of(x);
    DppGap out;
    out.value = V(z0);
    const std::size_t U = spec.controls.size();
    const double rho = spec.rho;
    for (std::size_t u = 0; u < U; ++u) {
        std::vector<double> samples(paths);
        parallel_for(paths, [&](std::size_t p) {
            BrownianDriver drv(seed, p, spec.q, D);
            Eigen::VectorXd z = z0;
            std::vector<double> terms;
            terms.reserve(static_cast<std::size_t>(K) + 1);
            for (long k = 0; k < K; ++k) {
                terms.push_back(std::exp(-rho * k * D) * chain.running_cost(z, spec.controls[u]));
                z = chain.step(z, spec.controls[u], drv.next());
            }
            terms.push_back(std::exp(-rho * K * D) * V(z));
            samples[p] = compensated_sum(terms);
        });
        const SampleStats st = sample_stats(samples);
        out.rows.push_back({u, st.mean, st.std_error});
        if (u == 0 || st.mean < out.rows[out.best].mean) out.best = u;
    }
    out.gap = out.value - out.rows[out.best].mean;
    out.std_error = out.rows[out.best].std_error;
    // V(x) - E[...] telescopes into per-step defects, each at most bellman_defect at Z_k.
    const std::size_t dpaths = std::min<std::size_t>(paths, 2000);
    std::vector<double> defect(dpaths, 0.0);
    const Eigen::VectorXd& ub = spec.controls[out.best];
    parallel_for(dpaths, [&](std::size_t p) {
        BrownianDriver drv(seed, p, spec.q, D);
        Eigen::VectorXd z = z0;
        double acc = 0.0;
        for (long k = 0; k < K; ++k) {
            acc += std::exp(-rho * k * D) * bellman_defect(chain, V, z);
            z = chain.step(z, ub, drv.next());
        }
        defect[p] = acc;
    });
    out.grid_tolerance = sample_stats(defect).mean;
    return out;
}

struct GrowthFit {
    double exponent = 0.0;
    double constant = 0.0;  // max |V| / (1 + |x|^m) over grid nodes
    std::size_t node = 0;   // where the maximum is attained
};

/// Smallest C with |V(z)| <= C (1 + |lift(z)|^m) at every node of the field.
[[nodiscard]] inline GrowthFit growth_fit(const LagChain& chain, const ValueField& V, double m) {
    if (!(m >= 0.0)) throw ValidationError("growth_fit: exponent must be non-negative");
    GrowthFit f;
    f.exponent = m;
    for (std::size_t node = 0; node < V.grid.size(); ++node) {
        const double r = lifted_norm(chain.lifted(V.grid.point(node)));
        const double c = std::abs(V.values[static_cast<Eigen::Index>(node)]) / (1.0 + std::pow(r, m));
        if (c > f.constant) {
            f.constant = c;
            f.node = node;
        }
    }
    return f;
}

}  // namespace delayctl
