// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/sdde/brownian.hpp"
#include "delayctl/sdde/control.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

namespace delayctl {

/// Number of steps of size dt in span; throws unless dt divides span.
[[nodiscard]] inline int exact_steps(double span, double dt, const char* what) {
    if (!(dt > 0.0)) throw ValidationError(std::string(what) + ": step must be positive");
    if (!(span >= 0.0)) throw ValidationError(std::string(what) + ": span must be non-negative");
    const double ratio = span / dt;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError(std::string(what) + ": step " + std::to_string(dt) + " does not divide " +
                              std::to_string(span));
    return static_cast<int>(k);
}

/// Realized trajectory on [-d, T].
///
/// Column c of `history` holds y(t) at t = (c - lag_steps) dt. The column at
/// t = 0 holds x1(0); the head x0 is kept separately as states.col(0), which
/// matches the lifted picture where the segment and the head are independent
/// until the first step. For k >= 1 the two coincide.
struct SddePath {
    double dt = 0.0;
    double delay = 0.0;
    int lag_steps = 0;   // d / dt
    int steps = 0;       // T / dt
    Eigen::MatrixXd history;   // n x (lag_steps + steps + 1)
    Eigen::MatrixXd states;    // n x (steps + 1), y_0 = x0
    Eigen::MatrixXd controls;  // p x steps, u_k on [t_k, t_{k+1})
    std::uint64_t seed = 0;
    std::uint64_t path = 0;

    [[nodiscard]] double horizon() const noexcept { return steps * dt; }
    [[nodiscard]] double time(int k) const noexcept { return k * dt; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(states.rows()); }
};

namespace detail {

/// Kernel flattened to act on a contiguous history window: [w_0 a_0, ..., w_m a_m].
struct WindowKernel {
    Eigen::MatrixXd weighted;
    bool zero = true;

    WindowKernel(const Kernel& a) : weighted(a.rows(), a.cols() * a.grid().size()), zero(a.is_zero()) {
        const int n = a.cols();
        for (int j = 0; j < a.grid().size(); ++j)
            weighted.middleCols(j * n, n) = a.grid().weight(j) * a.at_node(j);
    }

    [[nodiscard]] Eigen::VectorXd apply(const Eigen::MatrixXd& history, int first_col) const {
        if (zero) return Eigen::VectorXd::Zero(weighted.rows());
        const Eigen::Index len = weighted.cols();
        const Eigen::Map<const Eigen::VectorXd> window(history.col(first_col).data(), len);
        return weighted * window;
    }
};

}  // namespace detail

/// Euler-Maruyama for dy = b0(y, int a1 y(t+.), u) dt + sigma0(y, int a2 y(t+.), u) dW
/// with the delay integrals evaluated by trapezoid on the step grid.
[[nodiscard]] inline SddePath simulate_sdde(const ProblemSpec& spec, const LiftedState& x, const ControlProcess& ctrl,
                                            double T, double dt, BrownianDriver& driver) {
    spec.validate();
    const int md = exact_steps(spec.delay(), dt, "simulate_sdde (delay)");
    const int K = exact_steps(T, dt, "simulate_sdde (horizon)");
    if (x.dim() != spec.n) throw DimensionError("simulate_sdde: initial state dimension != n");
    if (!x.grid().same_delay(spec.grid)) throw DimensionError("simulate_sdde: initial segment has another delay");
    if (driver.dim() != spec.q) throw DimensionError("simulate_sdde: driver dimension != q");
    if (std::abs(driver.step() - dt) > 1e-12 * dt) throw ValidationError("simulate_sdde: driver step != dt");
    ctrl.check_open_loop(spec.controls);

    const SegmentGrid step_grid(spec.delay(), md);
    const detail::WindowKernel k1(spec.a1.on(step_grid));
    const detail::WindowKernel k2(spec.a2.on(step_grid));
    const int n = spec.n;

    SddePath path;
    path.dt = dt;
    path.delay = spec.delay();
    path.lag_steps = md;
    path.steps = K;
    path.seed = driver.seed();
    path.path = driver.path();
    path.history.resize(n, md + K + 1);
    path.history.leftCols(md + 1) = resample_segment(x.tail(), step_grid).values();
    path.states.resize(n, K + 1);
    path.states.col(0) = x.head();
    path.controls.resize(spec.p, K);

    Eigen::VectorXd y = x.head();
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd i1 = k1.apply(path.history, k);
        const Eigen::VectorXd i2 = k2.apply(path.history, k);
        const StateView view{k * dt, static_cast<std::size_t>(k), dt, spec.delay(), path.states.col(k),
                             path.history.middleCols(k, md + 1)};
        const Eigen::VectorXd u = ctrl.at(view);
        if (ctrl.is_feedback()) ControlProcess::require_member(u, spec.controls);
        const Eigen::VectorXd dw = driver.next();
        y += spec.drift(y, i1, u) * dt + spec.diffusion(y, i2, u) * dw;
        if (!y.allFinite()) throw NonFiniteStateError(static_cast<std::size_t>(k + 1), "simulate_sdde");
        path.states.col(k + 1) = y;
        path.history.col(md + k + 1) = y;
        path.controls.col(k) = u;
    }
    return path;
}

}  // namespace delayctl
