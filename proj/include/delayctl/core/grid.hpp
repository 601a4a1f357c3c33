// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace delayctl {

/// Uniform grid on [-d, 0] carrying trapezoid weights.
///
/// Every L^2 quantity in the library (inner products, kernel integrals,
/// operator adjoints) is computed with these weights, so discrete identities
/// stay consistent with one another.
class SegmentGrid {
public:
    SegmentGrid(double delay, int intervals) : delay_(delay), intervals_(intervals) {
        if (!(delay > 0.0) || !std::isfinite(delay))
            throw ValidationError("SegmentGrid: delay must be positive and finite");
        if (intervals < 1)
            throw ValidationError("SegmentGrid: interval count must be >= 1");
        step_ = delay_ / intervals_;
        weights_ = Eigen::VectorXd::Constant(intervals_ + 1, step_);
        weights_[0] = 0.5 * step_;
        weights_[intervals_] = 0.5 * step_;
    }

    [[nodiscard]] double delay() const noexcept { return delay_; }
    [[nodiscard]] int intervals() const noexcept { return intervals_; }
    [[nodiscard]] int size() const noexcept { return intervals_ + 1; }
    [[nodiscard]] double step() const noexcept { return step_; }

    /// Node xi_j = -d + j h; the last node is pinned to exactly 0.
    [[nodiscard]] double node(int j) const noexcept {
        return j == intervals_ ? 0.0 : -delay_ + j * step_;
    }

    [[nodiscard]] double weight(int j) const noexcept { return weights_[j]; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }

    [[nodiscard]] bool same_delay(const SegmentGrid& other) const noexcept {
        return std::abs(delay_ - other.delay_) <= 1e-12 * std::max(1.0, delay_);
    }

    bool operator==(const SegmentGrid& other) const noexcept {
        return intervals_ == other.intervals_ && same_delay(other);
    }
    bool operator!=(const SegmentGrid& other) const noexcept { return !(*this == other); }

private:
    double delay_;
    int intervals_;
    double step_ = 0.0;
    Eigen::VectorXd weights_;
};

/// Function [-d,0] -> R^n tabulated at the grid nodes (column j = value at xi_j).
class Segment {
public:
    Segment(SegmentGrid grid, Eigen::MatrixXd values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.cols() != grid_.size())
            throw DimensionError("Segment: expected " + std::to_string(grid_.size()) +
                                 " node values, got " + std::to_string(values_.cols()));
        if (!values_.allFinite())
            throw ValidationError("Segment: values must be finite");
    }

    static Segment constant(const SegmentGrid& grid, const Eigen::VectorXd& value) {
        return Segment(grid, value.replicate(1, grid.size()));
    }

    template <typename F>
    static Segment from_function(const SegmentGrid& grid, int dim, F&& f) {
        Eigen::MatrixXd v(dim, grid.size());
        for (int j = 0; j < grid.size(); ++j) v.col(j) = f(grid.node(j));
        return Segment(grid, std::move(v));
    }

    [[nodiscard]] const SegmentGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::MatrixXd& values() noexcept { return values_; }
    [[nodiscard]] Eigen::VectorXd value(int j) const { return values_.col(j); }

    /// Piecewise-linear evaluation; xi is clamped to [-d, 0].
    [[nodiscard]] Eigen::VectorXd at(double xi) const {
        const double d = grid_.delay();
        const double pos = std::clamp((xi + d) / grid_.step(), 0.0,
                                      static_cast<double>(grid_.intervals()));
        int j = std::min(static_cast<int>(pos), grid_.intervals() - 1);
        const double theta = pos - j;
        if (theta == 0.0) return values_.col(j);
        return (1.0 - theta) * values_.col(j) + theta * values_.col(j + 1);
    }

private:
    SegmentGrid grid_;
    Eigen::MatrixXd values_;
};

/// Element (x0, x1) of R^n x L^2([-d,0]; R^n).
class LiftedState {
public:
    LiftedState(Eigen::VectorXd head, Segment tail) : head_(std::move(head)), tail_(std::move(tail)) {
        if (head_.size() != tail_.dim())
            throw DimensionError("LiftedState: head dimension " + std::to_string(head_.size()) +
                                 " != tail dimension " + std::to_string(tail_.dim()));
        if (!head_.allFinite()) throw ValidationError("LiftedState: head must be finite");
    }

    static LiftedState zero(const SegmentGrid& grid, int dim) {
        return LiftedState(Eigen::VectorXd::Zero(dim), Segment(grid, Eigen::MatrixXd::Zero(dim, grid.size())));
    }

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(head_.size()); }
    [[nodiscard]] const SegmentGrid& grid() const noexcept { return tail_.grid(); }
    [[nodiscard]] const Eigen::VectorXd& head() const noexcept { return head_; }
    [[nodiscard]] Eigen::VectorXd& head() noexcept { return head_; }
    [[nodiscard]] const Segment& tail() const noexcept { return tail_; }
    [[nodiscard]] Segment& tail() noexcept { return tail_; }

    /// Distance between tail(0) and the head; zero for states in D(A~).
    [[nodiscard]] double domain_defect() const {
        return (tail_.values().col(grid().intervals()) - head_).norm();
    }

    [[nodiscard]] bool in_domain(double tol = 1e-9) const {
        return domain_defect() <= tol * std::max(1.0, head_.norm());
    }

    LiftedState& operator+=(const LiftedState& o) {
        check_compatible(o);
        head_ += o.head_;
        tail_.values() += o.tail_.values();
        return *this;
    }
    LiftedState& operator-=(const LiftedState& o) {
        check_compatible(o);
        head_ -= o.head_;
        tail_.values() -= o.tail_.values();
        return *this;
    }
    LiftedState& operator*=(double s) {
        head_ *= s;
        tail_.values() *= s;
        return *this;
    }
    friend LiftedState operator+(LiftedState a, const LiftedState& b) { return a += b; }
    friend LiftedState operator-(LiftedState a, const LiftedState& b) { return a -= b; }
    friend LiftedState operator*(double s, LiftedState a) { return a *= s; }

    void check_compatible(const LiftedState& o) const {
        if (dim() != o.dim() || grid() != o.grid())
            throw DimensionError("LiftedState: grid or dimension mismatch");
    }

private:
    Eigen::VectorXd head_;
    Segment tail_;
};

/// x0.y0 + sum_j w_j x1(xi_j).y1(xi_j)
[[nodiscard]] inline double lifted_inner(const LiftedState& x, const LiftedState& y) {
    x.check_compatible(y);
    const auto& w = x.grid().weights();
    const Eigen::VectorXd nodewise = (x.tail().values().cwiseProduct(y.tail().values())).colwise().sum();
    return x.head().dot(y.head()) + w.dot(nodewise);
}

[[nodiscard]] inline double lifted_norm(const LiftedState& x) {
    return std::sqrt(std::max(0.0, lifted_inner(x, x)));
}

/// L^2 norm of a segment under the trapezoid weights.
[[nodiscard]] inline double segment_norm(const Segment& s) {
    const Eigen::VectorXd sq = s.values().colwise().squaredNorm();
    return std::sqrt(s.grid().weights().dot(sq));
}

/// Piecewise-linear transfer of a segment onto another grid with the same delay.
[[nodiscard]] inline Segment resample_segment(const Segment& s, const SegmentGrid& target) {
    if (!s.grid().same_delay(target))
        throw DimensionError("resample_segment: delay mismatch");
    if (s.grid() == target) return s;
    Eigen::MatrixXd v(s.dim(), target.size());
    for (int j = 0; j < target.size(); ++j) v.col(j) = s.at(target.node(j));
    return Segment(target, std::move(v));
}

[[nodiscard]] inline LiftedState resample_state(const LiftedState& x, const SegmentGrid& target) {
    return LiftedState(x.head(), resample_segment(x.tail(), target));
}

}  // namespace delayctl
