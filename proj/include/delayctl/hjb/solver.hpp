// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/numerics.hpp"
#include "delayctl/hjb/lag_chain.hpp"
#include "delayctl/hjb/value_field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace delayctl {

/// Grid over the chain coordinates. Head axes must be named after the state
/// components; lag axes ("z-1", ...) may be given explicitly, otherwise they
/// copy the head axis when the lag can influence the dynamics and collapse to
/// a single node at the head axis midpoint when it cannot.
[[nodiscard]] inline TensorGrid chain_grid(const LagChain& chain, const std::vector<Axis>& given) {
    std::map<std::string, Axis> by_name;
    for (const auto& a : given) {
        if (by_name.count(a.name)) throw ValidationError("chain_grid: duplicate axis " + a.name);
        by_name[a.name] = a;
    }
    std::vector<Axis> axes;
    std::size_t used = 0;
    for (int k = 0; k < chain.dim(); ++k) {
        const std::string name = chain.coordinate_name(k);
        if (auto it = by_name.find(name); it != by_name.end()) {
            axes.push_back(it->second);
            ++used;
            continue;
        }
        if (k < chain.n()) throw ValidationError("chain_grid: missing axis for state component " + name);
        Axis head = axes[static_cast<std::size_t>(k % chain.n())];
        head.name = name;
        if (!chain.relevant(k)) {
            head.min = head.max = 0.5 * (head.min + head.max);
            head.count = 1;
        }
        axes.push_back(head);
    }
    if (used != by_name.size()) {
        for (const auto& [name, a] : by_name) {
            bool found = false;
            for (const auto& b : axes) found = found || b.name == name;
            if (!found) throw ValidationError("chain_grid: unknown axis " + name);
        }
    }
    return TensorGrid(std::move(axes));
}

struct ValueIterationSettings {
    double tol = 1e-6;
    int max_iter = 20000;
    int gh_points = 5;
    std::size_t stencil_budget = 40'000'000;  // stored stencil entries before switching to on-the-fly
    double clamp_warning = 0.2;
};

struct ValueIterationResult {
    ValueField value;
    PolicyField policy;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residuals;  // sup |V_{k+1} - V_k| per sweep
    double clamp_rate = 0.0;        // share of quadrature transitions leaving the box
    bool precomputed = false;
    std::vector<std::string> warnings;
};

namespace detail {

/// Tensor Gauss-Hermite nodes for dW ~ N(0, dt I_q); a single zero node when the noise is off.
struct NoiseRule {
    std::vector<Eigen::VectorXd> increments;
    std::vector<double> weights;
};

inline NoiseRule noise_rule(const LagChain& chain, int points) {
    NoiseRule r;
    const int q = chain.spec().q;
    if (chain.spec().dynamics.deterministic) {
        r.increments.push_back(Eigen::VectorXd::Zero(q));
        r.weights.push_back(1.0);
        return r;
    }
    const GaussHermite gh = gauss_hermite(points);
    const double sd = std::sqrt(chain.step());
    std::size_t total = 1;
    for (int i = 0; i < q; ++i) total *= gh.nodes.size();
    for (std::size_t c = 0; c < total; ++c) {
        Eigen::VectorXd dw(q);
        double w = 1.0;
        std::size_t rest = c;
        for (int i = 0; i < q; ++i) {
            const std::size_t j = rest % gh.nodes.size();
            rest /= gh.nodes.size();
            dw[i] = sd * gh.nodes[j];
            w *= gh.weights[j];
        }
        r.increments.push_back(dw);
        r.weights.push_back(w);
    }
    return r;
}

/// Sparse rows of the one-step operator: for (node, control) the running cost
/// and the discounted quadrature/interpolation weights over next-step nodes.
struct TransitionTable {
    std::vector<double> cost;            // nodes * controls
    std::vector<std::size_t> offset;     // nodes * controls + 1
    std::vector<std::uint32_t> target;
    std::vector<double> weight;
};

}  // namespace detail

/// Bellman operator of the chain on a grid: (T V)(z) = min_u { l(z0,u) D + e^{-rho D} E[V(z')] },
/// with E over the Gauss-Hermite rule and V(z') by clamped multilinear interpolation.
class BellmanOperator {
public:
    BellmanOperator(const LagChain& chain, TensorGrid grid, const ValueIterationSettings& s = {})
        : chain_(chain), grid_(std::move(grid)), rule_(detail::noise_rule(chain, s.gh_points)) {
        if (grid_.dim() != chain_.dim()) throw DimensionError("BellmanOperator: grid dimension != chain dimension");
        if (grid_.size() > std::numeric_limits<std::uint32_t>::max())
            throw ValidationError("BellmanOperator: grid too large");
        int active = 0;
        for (const auto& a : grid_.axes()) active += a.degenerate() ? 0 : 1;
        const double estimate = static_cast<double>(grid_.size()) * controls() * rule_.weights.size() * (1 << active);
        precomputed_ = estimate <= static_cast<double>(s.stencil_budget);
        std::size_t clamped = 0, total = 0;
        if (precomputed_) {
            table_.cost.resize(grid_.size() * controls());
            table_.offset.reserve(grid_.size() * controls() + 1);
            table_.offset.push_back(0);
            table_.target.reserve(static_cast<std::size_t>(estimate));
            table_.weight.reserve(static_cast<std::size_t>(estimate));
        }
        // Stencils are built serially: cheap next to the sweeps and keeps the table layout fixed.
        const double beta = chain_.discount();
        for (std::size_t node = 0; node < grid_.size(); ++node) {
            const Eigen::VectorXd z = grid_.point(node);
            for (std::size_t u = 0; u < controls(); ++u) {
                const Eigen::VectorXd& uv = chain_.spec().controls[u];
                if (precomputed_) table_.cost[node * controls() + u] = chain_.running_cost(z, uv);
                for (std::size_t g = 0; g < rule_.weights.size(); ++g) {
                    const Eigen::VectorXd next = chain_.step(z, uv, rule_.increments[g]);
                    if (!next.allFinite()) throw NonFiniteStateError(0, "BellmanOperator: transition");
                    ++total;
                    if (grid_.outside(next)) ++clamped;
                    if (precomputed_) {
                        const double wg = beta * rule_.weights[g];
                        grid_.for_each_corner(next, [&](std::size_t t, double w) {
                            table_.target.push_back(static_cast<std::uint32_t>(t));
                            table_.weight.push_back(wg * w);
                        });
                    }
                }
                if (precomputed_) table_.offset.push_back(table_.target.size());
            }
        }
        clamp_rate_ = total ? static_cast<double>(clamped) / static_cast<double>(total) : 0.0;
    }

    [[nodiscard]] const LagChain& chain() const noexcept { return chain_; }
    [[nodiscard]] const TensorGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t controls() const noexcept { return chain_.spec().controls.size(); }
    [[nodiscard]] double clamp_rate() const noexcept { return clamp_rate_; }
    [[nodiscard]] bool precomputed() const noexcept { return precomputed_; }

    /// l D + e^{-rho D} E[V(z')] at a grid node for control index u.
    [[nodiscard]] double q_value(std::size_t node, std::size_t u, const Eigen::VectorXd& V) const {
        if (precomputed_) {
            const std::size_t row = node * controls() + u;
            double acc = table_.cost[row];
            for (std::size_t e = table_.offset[row]; e < table_.offset[row + 1]; ++e)
                acc += table_.weight[e] * V[static_cast<Eigen::Index>(table_.target[e])];
            return acc;
        }
        const Eigen::VectorXd z = grid_.point(node);
        const Eigen::VectorXd& uv = chain_.spec().controls[u];
        double acc = chain_.running_cost(z, uv);
        const double beta = chain_.discount();
        for (std::size_t g = 0; g < rule_.weights.size(); ++g) {
            const Eigen::VectorXd next = chain_.step(z, uv, rule_.increments[g]);
            grid_.for_each_corner(next, [&](std::size_t t, double w) {
                acc += beta * rule_.weights[g] * w * V[static_cast<Eigen::Index>(t)];
            });
        }
        return acc;
    }

    /// Minimizing control index at a node (strict comparison: ties go to the lowest index).
    [[nodiscard]] std::pair<double, std::size_t> minimize(std::size_t node, const Eigen::VectorXd& V) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t u = 0; u < controls(); ++u) {
            const double v = q_value(node, u, V);
            if (v < best) {
                best = v;
                arg = u;
            }
        }
        return {best, arg};
    }

    /// One sweep into `out`; returns sup |out - V|.
    double apply(const Eigen::VectorXd& V, Eigen::VectorXd& out, std::vector<std::size_t>& policy) const {
        const std::size_t N = grid_.size();
        const std::size_t chunks = std::min<std::size_t>(N, std::max<unsigned>(1, thread_count()) * 8);
        std::vector<double> local(chunks, 0.0);
        parallel_for(chunks, [&](std::size_t c) {
            const std::size_t lo = N * c / chunks, hi = N * (c + 1) / chunks;
            double r = 0.0;
            for (std::size_t node = lo; node < hi; ++node) {
                const auto [v, arg] = minimize(node, V);
                out[static_cast<Eigen::Index>(node)] = v;
                policy[node] = arg;
                r = std::max(r, std::abs(v - V[static_cast<Eigen::Index>(node)]));
            }
            local[c] = r;
        });
        return *std::max_element(local.begin(), local.end());
    }

private:
    const LagChain& chain_;
    TensorGrid grid_;
    detail::NoiseRule rule_;
    detail::TransitionTable table_;
    bool precomputed_ = false;
    double clamp_rate_ = 0.0;
};

/// Discounted value iteration from V = 0 until sup |V_{k+1} - V_k| <= tol.
[[nodiscard]] inline ValueIterationResult value_iteration(const BellmanOperator& T, const ValueIterationSettings& s = {}) {
    if (!(s.tol > 0.0)) throw ValidationError("value_iteration: tol must be positive");
    if (s.max_iter < 1) throw ValidationError("value_iteration: max_iter must be >= 1");
    const std::size_t N = T.grid().size();
    Eigen::VectorXd V = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    Eigen::VectorXd next(static_cast<Eigen::Index>(N));
    std::vector<std::size_t> policy(N, 0);
    ValueIterationResult r;
    r.clamp_rate = T.clamp_rate();
    r.precomputed = T.precomputed();
    if (r.clamp_rate > s.clamp_warning)
        r.warnings.push_back("clamp rate " + std::to_string(r.clamp_rate) + " exceeds " +
                             std::to_string(s.clamp_warning) + ": boundary bias likely");
    for (int it = 1; it <= s.max_iter; ++it) {
        const double res = T.apply(V, next, policy);
        V.swap(next);
        r.residuals.push_back(res);
        if (!std::isfinite(res)) throw NonFiniteStateError(static_cast<std::size_t>(it), "value_iteration");
        if (res <= s.tol) {
            r.iterations = it;
            r.residual = res;
            r.value = {T.grid(), V};
            r.policy = {T.grid(), policy};
            return r;
        }
    }
    throw ConvergenceError("value_iteration: no convergence in " + std::to_string(s.max_iter) + " sweeps",
                           r.residuals.back());
}

[[nodiscard]] inline ValueIterationResult value_iteration(const LagChain& chain, const TensorGrid& grid,
                                                          const ValueIterationSettings& s = {}) {
    const BellmanOperator T(chain, grid, s);
    return value_iteration(T, s);
}

}  // namespace delayctl
