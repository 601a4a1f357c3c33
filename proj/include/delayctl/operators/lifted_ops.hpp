// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace delayctl {

/// Operator-norm bound of the shift semigroup, sqrt(2(1+d)).
[[nodiscard]] inline double semigroup_norm_bound(double delay) { return std::sqrt(2.0 * (1.0 + delay)); }

/// e^{tA}: keeps the head, shifts the history left by t and fills the vacated
/// part of the window with the head value.
[[nodiscard]] inline LiftedState apply_semigroup_A(double t, const LiftedState& x) {
    if (!(t >= 0.0)) throw ValidationError("apply_semigroup_A: negative time");
    if (t == 0.0) return x;
    const SegmentGrid& g = x.grid();
    const double snap = 1e-12 * g.delay();
    Eigen::MatrixXd out(x.dim(), g.size());
    for (int j = 0; j < g.size(); ++j) {
        const double s = t + g.node(j);
        out.col(j) = (s <= snap) ? x.tail().at(std::min(s, 0.0)) : x.head();
    }
    return LiftedState(x.head(), Segment(g, std::move(out)));
}

/// Finite-difference derivative of a tabulated segment: central in the
/// interior, second-order one-sided at both ends (first-order when m = 1).
[[nodiscard]] inline Segment segment_derivative(const Segment& s) {
    const SegmentGrid& g = s.grid();
    const int m = g.intervals();
    const double h = g.step();
    const auto& v = s.values();
    Eigen::MatrixXd d(s.dim(), g.size());
    if (m == 1) {
        d.col(0) = d.col(1) = (v.col(1) - v.col(0)) / h;
        return Segment(g, std::move(d));
    }
    d.col(0) = (-3.0 * v.col(0) + 4.0 * v.col(1) - v.col(2)) / (2.0 * h);
    d.col(m) = (3.0 * v.col(m) - 4.0 * v.col(m - 1) + v.col(m - 2)) / (2.0 * h);
    for (int j = 1; j < m; ++j) d.col(j) = (v.col(j + 1) - v.col(j - 1)) / (2.0 * h);
    return Segment(g, std::move(d));
}

inline void require_domain(const LiftedState& x, const char* who) {
    if (!x.in_domain())
        throw DomainError(std::string(who) + ": state not in D(A~): |tail(0) - head| = " +
                          std::to_string(x.domain_defect()));
}

/// A~ x = (-x0, x1') on D(A~) = { tail(0) = head }.
[[nodiscard]] inline LiftedState apply_Atilde(const LiftedState& x) {
    require_domain(x, "apply_Atilde");
    return LiftedState(-x.head(), segment_derivative(x.tail()));
}

/// A~^{-1} x = (-x0, -x0 - int_xi^0 x1), cumulative trapezoid from the right end.
/// The output satisfies tail(0) = head exactly.
[[nodiscard]] inline LiftedState apply_Atilde_inv(const LiftedState& x) {
    const SegmentGrid& g = x.grid();
    const int m = g.intervals();
    const double h = g.step();
    const auto& v = x.tail().values();
    Eigen::MatrixXd out(x.dim(), g.size());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.dim());
    out.col(m) = -x.head();
    for (int j = m - 1; j >= 0; --j) {
        acc += 0.5 * h * (v.col(j) + v.col(j + 1));
        out.col(j) = -x.head() - acc;
    }
    return LiftedState(-x.head(), Segment(g, std::move(out)));
}

/// |x|_{-1} = |A~^{-1} x|_X
[[nodiscard]] inline double minus_one_norm(const LiftedState& x) { return lifted_norm(apply_Atilde_inv(x)); }

/// (0, N 1_{[-d, -d+1/N]}): unit mass concentrating at the far end of the window.
/// An interior node on the jump carries N/2 so the trapezoid mass is exactly 1.
/// Requires N d to divide the interval count.
[[nodiscard]] inline LiftedState endpoint_spike(const SegmentGrid& g, int N) {
    const double nodes_per_bump = g.intervals() / (N * g.delay());
    const int k = static_cast<int>(std::lround(nodes_per_bump));
    if (N < 1 || k < 1 || std::abs(nodes_per_bump - k) > 1e-9)
        throw ValidationError("endpoint_spike: 1/N must be a positive multiple of the grid step");
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(1, g.size());
    for (int j = 0; j < k; ++j) t(0, j) = N;
    t(0, k) = k == g.intervals() ? N : 0.5 * N;
    return LiftedState(Eigen::VectorXd::Zero(1), Segment(g, std::move(t)));
}

/// Grid-scale sawtooth (0, e_i (-1)^{m-j}) in component i; its cumulative
/// trapezoid integral vanishes, so A~^{-1} sends it to zero.
[[nodiscard]] inline LiftedState sawtooth_mode(const SegmentGrid& g, int n, int component) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, g.size());
    for (int j = 0; j < g.size(); ++j) t(component, j) = ((g.intervals() - j) % 2 == 0) ? 1.0 : -1.0;
    return LiftedState(Eigen::VectorXd::Zero(n), Segment(g, std::move(t)));
}

/// <A~ x, x>_X for x in D(A~). Integration by parts gives -|x0|^2/2 - |x1(-d)|^2/2;
/// the stencil reproduces it up to the end corrections
/// (x1(0).D2_0 - x1(-d).D2_{-d}) / 4 with D2 the second difference at each end, O(h^2).
[[nodiscard]] inline double dissipativity_form(const LiftedState& x) {
    return lifted_inner(apply_Atilde(x), x);
}

/// Closed form of the dissipativity form after integrating by parts.
[[nodiscard]] inline double dissipativity_closed_form(const LiftedState& x) {
    return -0.5 * x.head().squaredNorm() - 0.5 * x.tail().values().col(0).squaredNorm();
}

/// <A~^{-1} x, x>_X; the weak B-condition with C0 = 0 asks for <= 0.
[[nodiscard]] inline double weak_B_form(const LiftedState& x) { return lifted_inner(apply_Atilde_inv(x), x); }

}  // namespace delayctl
