// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/numerics.hpp"
#include "delayctl/hjb/hamiltonian.hpp"
#include "delayctl/hjb/lag_chain.hpp"
#include "delayctl/hjb/value_field.hpp"
#include "delayctl/sdde/control.hpp"
#include "delayctl/sdde/cost.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace delayctl {

namespace detail {

/// Finite difference of nodal values along axis k at a node: central inside,
/// one-sided on the boundary, zero on degenerate axes.
inline double node_gradient(const ValueField& V, std::size_t node, int k) {
    const Axis& a = V.grid.axis(k);
    if (a.degenerate()) return 0.0;
    const int i = V.grid.index_along(node, k);
    const std::size_t s = V.grid.stride(k);
    const auto at = [&](std::size_t j) { return V.values[static_cast<Eigen::Index>(j)]; };
    const double h = a.spacing();
    if (i == 0) return (at(node + s) - at(node)) / h;
    if (i == a.count - 1) return (at(node) - at(node - s)) / h;
    return (at(node + s) - at(node - s)) / (2.0 * h);
}

/// Second difference along (k, l), centred at the nearest node with a full stencil.
inline double node_second(const ValueField& V, std::size_t node, int k, int l) {
    const Axis& ak = V.grid.axis(k);
    const Axis& al = V.grid.axis(l);
    if (ak.count < 3 || al.count < 3) return 0.0;
    const auto shift = [&](std::size_t nd, int axis, int to) {
        const int i = V.grid.index_along(nd, axis);
        return nd + static_cast<std::size_t>(to - i) * V.grid.stride(axis);
    };
    std::size_t c = shift(node, k, std::clamp(V.grid.index_along(node, k), 1, ak.count - 2));
    c = shift(c, l, std::clamp(V.grid.index_along(c, l), 1, al.count - 2));
    const auto at = [&](std::size_t j) { return V.values[static_cast<Eigen::Index>(j)]; };
    const std::size_t sk = V.grid.stride(k), sl = V.grid.stride(l);
    const double hk = ak.spacing(), hl = al.spacing();
    if (k == l) return (at(c + sk) - 2.0 * at(c) + at(c - sk)) / (hk * hk);
    return (at(c + sk + sl) - at(c + sk - sl) - at(c - sk + sl) + at(c - sk - sl)) / (4.0 * hk * hl);
}

}  // namespace detail

/// Candidate feedback: per node, the control maximizing -b0.p0 - l (or the full
/// Hamiltonian integrand when sigma0 depends on u), with p0 and Z00 taken from
/// finite differences of V in the head coordinates. Ties go to the lowest index.
[[nodiscard]] inline PolicyField extract_feedback(const LagChain& chain, const ValueField& V) {
    if (V.grid.dim() != chain.dim()) throw DimensionError("extract_feedback: field dimension != chain dimension");
    const ProblemSpec& spec = chain.spec();
    const int n = chain.n();
    const bool full = spec.dynamics.diffusion_depends_on_control;
    PolicyField pol{V.grid, std::vector<std::size_t>(V.grid.size(), 0)};
    parallel_for(V.grid.size(), [&](std::size_t node) {
        const Eigen::VectorXd z = V.grid.point(node);
        Eigen::VectorXd p0(n);
        for (int i = 0; i < n; ++i) p0[i] = detail::node_gradient(V, node, i);
        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
        if (full)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) Z(i, j) = detail::node_second(V, node, i, j);
        Z = 0.5 * (Z + Z.transpose());
        const Eigen::VectorXd y0 = z.head(n);
        const Eigen::VectorXd i1 = chain.integral(chain.a1(), z), i2 = chain.integral(chain.a2(), z);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t u = 0; u < spec.controls.size(); ++u) {
            const Eigen::VectorXd& uv = spec.controls[u];
            const double v = full ? hamiltonian_integrand(spec, y0, i1, i2, uv, p0, Z)
                                  : -spec.drift(y0, i1, uv).dot(p0) - spec.cost(y0, uv);
            if (v > best) {
                best = v;
                arg = u;
            }
        }
        pol.index[node] = arg;
    });
    return pol;
}

/// A PolicyField read as a feedback control: the observed window is sampled
/// into the chain register and the nearest node's control is applied.
class RegisterPolicy {
public:
    RegisterPolicy(const LagChain& chain, PolicyField policy)
        : chain_(chain), policy_(std::move(policy)), clamped_(std::make_shared<std::atomic<std::size_t>>(0)),
          calls_(std::make_shared<std::atomic<std::size_t>>(0)) {
        if (policy_.grid.dim() != chain.dim()) throw DimensionError("RegisterPolicy: grid dimension != chain dimension");
        if (policy_.index.size() != policy_.grid.size()) throw ValidationError("RegisterPolicy: index/grid size mismatch");
        for (auto i : policy_.index)
            if (i >= chain.spec().controls.size()) throw ValidationError("RegisterPolicy: control index out of range");
    }

    [[nodiscard]] Eigen::VectorXd register_of(const StateView& view) const {
        const int n = chain_.n();
        Eigen::VectorXd z(chain_.dim());
        for (int j = 0; j <= chain_.lags(); ++j) z.segment(j * n, n) = view.at_lag(j * chain_.step());
        return z;
    }

    [[nodiscard]] ControlProcess control() const {
        return ControlProcess::feedback([self = *this](const StateView& v) {
            const Eigen::VectorXd z = self.register_of(v);
            self.calls_->fetch_add(1, std::memory_order_relaxed);
            if (self.policy_.grid.outside(z)) self.clamped_->fetch_add(1, std::memory_order_relaxed);
            return self.chain_.spec().controls[self.policy_.at(z)];
        });
    }

    /// Share of lookups that fell outside the policy box so far.
    [[nodiscard]] double clamp_rate() const {
        const auto c = calls_->load();
        return c ? static_cast<double>(clamped_->load()) / static_cast<double>(c) : 0.0;
    }

private:
    const LagChain& chain_;
    PolicyField policy_;
    std::shared_ptr<std::atomic<std::size_t>> clamped_;
    std::shared_ptr<std::atomic<std::size_t>> calls_;
};

struct PolicyValue {
    SampleStats stats;
    double clamp_rate = 0.0;  // share of policy lookups outside the grid box
};

/// Closed-loop Monte Carlo cost of a tabulated policy on the SDDE itself.
[[nodiscard]] inline PolicyValue policy_mc_value(const LagChain& chain, const PolicyField& policy, const LiftedState& x,
                                                 const MonteCarloSettings& s) {
    const RegisterPolicy rp(chain, policy);
    PolicyValue out;
    out.stats = mc_cost(chain.spec(), x, rp.control(), s);
    out.clamp_rate = rp.clamp_rate();
    return out;
}

}  // namespace delayctl
