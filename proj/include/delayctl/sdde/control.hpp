// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

namespace delayctl {

/// What a feedback policy may observe at step k: the current head and the
/// stored history window on [t_k - d, t_k] (step-grid columns, oldest first).
/// Nothing after t_k is reachable, which is the discrete form of progressive
/// measurability.
struct StateView {
    double time = 0.0;
    std::size_t step = 0;
    double dt = 0.0;
    double delay = 0.0;
    Eigen::Ref<const Eigen::VectorXd> head;
    Eigen::Ref<const Eigen::MatrixXd> window;  // n x (d/dt + 1); last column is the value at lag 0

    /// y(t_k - lag), lag in [0, d], linear between stored columns. lag = 0 returns the head.
    [[nodiscard]] Eigen::VectorXd at_lag(double lag) const {
        if (lag <= 0.0) return head;
        const int last = static_cast<int>(window.cols()) - 1;
        const double pos = std::clamp(last - lag / dt, 0.0, static_cast<double>(last));
        const int j = std::min(static_cast<int>(pos), last - 1);
        const double theta = pos - j;
        return (1.0 - theta) * window.col(j) + theta * window.col(j + 1);
    }

    /// The lifted state (y(t_k), y(t_k + .)) resampled onto g.
    [[nodiscard]] LiftedState lifted(const SegmentGrid& g) const {
        Eigen::MatrixXd tail(head.size(), g.size());
        for (int j = 0; j < g.size(); ++j) tail.col(j) = at_lag(-g.node(j));
        // at_lag(0) is the head; the tail value at xi = 0 comes from the stored window.
        tail.col(g.intervals()) = window.col(window.cols() - 1);
        return LiftedState(head, Segment(g, std::move(tail)));
    }
};

using FeedbackPolicy = std::function<Eigen::VectorXd(const StateView&)>;

/// Open-loop (piecewise constant on the step grid) or feedback control.
class ControlProcess {
public:
    static ControlProcess constant(Eigen::VectorXd u) { return ControlProcess(OpenLoop{{std::move(u)}}); }

    /// values[k] is applied on [t_k, t_{k+1}).
    static ControlProcess open_loop(std::vector<Eigen::VectorXd> values) {
        if (values.empty()) throw ValidationError("ControlProcess: open-loop schedule is empty");
        return ControlProcess(OpenLoop{std::move(values)});
    }

    static ControlProcess feedback(FeedbackPolicy policy) {
        if (!policy) throw ValidationError("ControlProcess: empty feedback policy");
        return ControlProcess(Feedback{std::move(policy)});
    }

    [[nodiscard]] bool is_feedback() const noexcept { return std::holds_alternative<Feedback>(impl_); }

    /// Schedule length an open-loop control covers; 0 for constant or feedback.
    [[nodiscard]] std::size_t schedule_length() const {
        if (const auto* o = std::get_if<OpenLoop>(&impl_)) return o->values.size() == 1 ? 0 : o->values.size();
        return 0;
    }

    [[nodiscard]] Eigen::VectorXd at(const StateView& view) const {
        if (const auto* o = std::get_if<OpenLoop>(&impl_)) {
            if (o->values.size() == 1) return o->values.front();
            if (view.step >= o->values.size())
                throw ValidationError("ControlProcess: open-loop schedule shorter than the horizon");
            return o->values[view.step];
        }
        return std::get<Feedback>(impl_).policy(view);
    }

    /// Every open-loop value must be a member of U.
    void check_open_loop(const std::vector<Eigen::VectorXd>& U) const {
        if (const auto* o = std::get_if<OpenLoop>(&impl_))
            for (const auto& u : o->values) require_member(u, U);
    }

    static void require_member(const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& U) {
        for (const auto& v : U)
            if (v.size() == u.size() && (v - u).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()))
                return;
        throw ValidationError("ControlProcess: control value outside the control set");
    }

private:
    struct OpenLoop {
        std::vector<Eigen::VectorXd> values;
    };
    struct Feedback {
        FeedbackPolicy policy;
    };
    explicit ControlProcess(std::variant<OpenLoop, Feedback> impl) : impl_(std::move(impl)) {}

    std::variant<OpenLoop, Feedback> impl_;
};

}  // namespace delayctl
