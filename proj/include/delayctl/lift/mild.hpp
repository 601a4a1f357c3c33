// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/operators/lifted_ops.hpp"
#include "delayctl/sdde/brownian.hpp"
#include "delayctl/sdde/control.hpp"
#include "delayctl/sdde/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace delayctl {

/// How the tail is carried between steps.
///
/// Reconstructed: the scheme only ever writes head values into the history
/// (the semigroup shifts the tail and fills the vacated window with the head),
/// so Y1_k(xi) = x1(t_k + xi) when t_k + xi <= 0 and the head of the first step
/// at or after t_k + xi otherwise. Tails are rebuilt from the heads on demand,
/// which keeps nodal values free of re-interpolation drift.
///
/// Nodal: the tabulated tail is pushed through e^{A dt} on the state grid every
/// step. When dt is not a multiple of the grid step each push interpolates, and
/// the accumulated smoothing is first order in the grid step.
enum class MildTail { Reconstructed, Nodal };

/// Lifted trajectory Y_k = (Y0_k, Y1_k) of the one-step mild Euler scheme.
struct LiftedPath {
    LiftedState initial;
    double dt = 0.0;
    int steps = 0;
    Eigen::MatrixXd heads;     // n x (steps + 1)
    Eigen::MatrixXd controls;  // p x steps
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    std::vector<Segment> tails;  // Nodal scheme only, one per step

    [[nodiscard]] const SegmentGrid& grid() const noexcept { return initial.grid(); }
    [[nodiscard]] double time(int k) const noexcept { return k * dt; }
    [[nodiscard]] double horizon() const noexcept { return steps * dt; }

    /// History value at absolute time s <= t_k as seen from step k.
    [[nodiscard]] Eigen::VectorXd history_at(int k, double s) const {
        const double snap = 1e-12 * grid().delay();
        if (s <= snap) return initial.tail().at(std::min(s, 0.0));
        const int i = std::clamp(static_cast<int>(std::ceil(s / dt - 1e-9)), 1, k);
        return heads.col(i);
    }

    [[nodiscard]] LiftedState state(int k) const { return state_on(k, grid()); }

    [[nodiscard]] LiftedState state_on(int k, const SegmentGrid& g) const {
        if (k < 0 || k > steps) throw ValidationError("LiftedPath: step out of range");
        if (k == 0 && g == grid()) return initial;
        if (!tails.empty()) {
            LiftedState s(heads.col(k), tails[static_cast<std::size_t>(k)]);
            return g == grid() ? s : resample_state(s, g);
        }
        Eigen::MatrixXd tail(heads.rows(), g.size());
        for (int j = 0; j < g.size(); ++j) tail.col(j) = history_at(k, time(k) + g.node(j));
        return LiftedState(heads.col(k), Segment(g, std::move(tail)));
    }
};

/// Y_{k+1} = e^{A dt}(Y_k + (b0 dt + sigma0 dW, 0)), with b0 and sigma0 evaluated
/// on (Y0_k, int a_i Y1_k) and the delay integrals taken on the state grid.
[[nodiscard]] inline LiftedPath simulate_mild(const ProblemSpec& spec, const LiftedState& x, const ControlProcess& ctrl,
                                              double T, double dt, BrownianDriver& driver,
                                              MildTail scheme = MildTail::Nodal) {
    spec.validate();
    const int md = exact_steps(spec.delay(), dt, "simulate_mild (delay)");
    const int K = exact_steps(T, dt, "simulate_mild (horizon)");
    if (x.dim() != spec.n) throw DimensionError("simulate_mild: initial state dimension != n");
    if (!x.grid().same_delay(spec.grid)) throw DimensionError("simulate_mild: initial segment has another delay");
    if (driver.dim() != spec.q) throw DimensionError("simulate_mild: driver dimension != q");
    if (std::abs(driver.step() - dt) > 1e-12 * dt) throw ValidationError("simulate_mild: driver step != dt");
    ctrl.check_open_loop(spec.controls);

    LiftedPath path{resample_state(x, spec.grid), dt, K, Eigen::MatrixXd(spec.n, K + 1),
                    Eigen::MatrixXd(spec.p, K), driver.seed(), driver.path(), {}};
    path.heads.col(0) = x.head();
    if (scheme == MildTail::Nodal) {
        path.tails.reserve(static_cast<std::size_t>(K) + 1);
        path.tails.push_back(path.initial.tail());
    }
    const SegmentGrid step_grid(spec.delay(), md);
    Eigen::MatrixXd window(spec.n, md + 1);

    for (int k = 0; k < K; ++k) {
        const LiftedState Y = path.state(k);
        Eigen::VectorXd u;
        if (ctrl.is_feedback()) {
            window = path.state_on(k, step_grid).tail().values();
            const StateView view{path.time(k), static_cast<std::size_t>(k), dt, spec.delay(), path.heads.col(k), window};
            u = ctrl.at(view);
            ControlProcess::require_member(u, spec.controls);
        } else {
            const StateView view{path.time(k), static_cast<std::size_t>(k), dt, spec.delay(), path.heads.col(k), window};
            u = ctrl.at(view);
        }
        const Eigen::VectorXd i1 = kernel_convolve(spec.a1, Y.tail());
        const Eigen::VectorXd i2 = kernel_convolve(spec.a2, Y.tail());
        const Eigen::VectorXd dw = driver.next();
        const Eigen::VectorXd next = Y.head() + spec.drift(Y.head(), i1, u) * dt + spec.diffusion(Y.head(), i2, u) * dw;
        if (!next.allFinite()) throw NonFiniteStateError(static_cast<std::size_t>(k + 1), "simulate_mild");
        path.heads.col(k + 1) = next;
        path.controls.col(k) = u;
        if (scheme == MildTail::Nodal) {
            LiftedState pushed = Y;
            pushed.head() = next;
            path.tails.push_back(apply_semigroup_A(dt, pushed).tail());
        }
    }
    return path;
}

/// (y(t), y(t + .)) from a simulated path, linear in time between stored
/// columns, tabulated on g.
[[nodiscard]] inline LiftedState lift_history(const SddePath& path, double t, const SegmentGrid& g) {
    const double T = path.horizon();
    if (!(t >= -1e-12 * std::max(1.0, T) && t <= T * (1.0 + 1e-12) + 1e-15))
        throw ValidationError("lift_history: t outside [0, T]");
    if (std::abs(g.delay() - path.delay) > 1e-12 * path.delay) throw DimensionError("lift_history: delay mismatch");
    t = std::clamp(t, 0.0, T);
    const int last = static_cast<int>(path.history.cols()) - 1;
    auto column_at = [&](double s) -> Eigen::VectorXd {
        const double pos = std::clamp(s / path.dt + path.lag_steps, 0.0, static_cast<double>(last));
        const int j = std::min(static_cast<int>(std::floor(pos + 1e-9)), last);
        const double theta = pos - j;
        if (theta <= 1e-9 || j == last) return path.history.col(j);
        return (1.0 - theta) * path.history.col(j) + theta * path.history.col(j + 1);
    };
    Eigen::VectorXd head;
    {
        const double pos = t / path.dt;
        const int k = std::min(static_cast<int>(std::floor(pos + 1e-9)), path.steps);
        const double theta = pos - k;
        head = (theta <= 1e-9 || k == path.steps) ? Eigen::VectorXd(path.states.col(k))
                                                   : Eigen::VectorXd((1.0 - theta) * path.states.col(k) +
                                                                     theta * path.states.col(k + 1));
    }
    Eigen::MatrixXd tail(path.dim(), g.size());
    for (int j = 0; j < g.size(); ++j) tail.col(j) = column_at(t + g.node(j));
    return LiftedState(std::move(head), Segment(g, std::move(tail)));
}

}  // namespace delayctl
