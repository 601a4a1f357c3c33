// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace delayctl {

/// Shift-register Markov chain z = (y_0, y_{-1}, ..., y_{-m_lag}), y_{-j} = y(t - j D),
/// D = d / m_lag. One step: Euler update of the head with the delay integrals
/// taken by trapezoid over the register, then shift.
class LagChain {
public:
    LagChain(const ProblemSpec& spec, int m_lag)
        : spec_(spec), mlag_(m_lag), grid_(spec.delay(), check_lags(m_lag)),
          a1_(spec.a1.on(grid_)), a2_(spec.a2.on(grid_)) {
        spec_.validate();
        step_ = grid_.step();
        relevant_.assign(static_cast<std::size_t>(dim()), true);
        // Lag j of component i matters only if some kernel reads component i at lag j or later.
        for (int i = 0; i < n(); ++i) {
            bool used_later = false;
            for (int j = mlag_; j >= 1; --j) {
                const int c = mlag_ - j;
                used_later = used_later || a1_.at_node(c).col(i).cwiseAbs().maxCoeff() > 0.0 ||
                             a2_.at_node(c).col(i).cwiseAbs().maxCoeff() > 0.0;
                relevant_[static_cast<std::size_t>(j * n() + i)] = used_later;
            }
        }
    }

    [[nodiscard]] const ProblemSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] int n() const noexcept { return spec_.n; }
    [[nodiscard]] int lags() const noexcept { return mlag_; }
    [[nodiscard]] int dim() const noexcept { return spec_.n * (mlag_ + 1); }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] double discount() const { return std::exp(-spec_.rho * step_); }
    [[nodiscard]] const SegmentGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Kernel& a1() const noexcept { return a1_; }
    [[nodiscard]] const Kernel& a2() const noexcept { return a2_; }

    /// Whether coordinate k of z can influence the future of the chain.
    [[nodiscard]] bool relevant(int k) const { return relevant_[static_cast<std::size_t>(k)]; }

    /// Label of coordinate k: component name, with "-j" for lag j.
    [[nodiscard]] std::string coordinate_name(int k) const {
        const int j = k / n(), i = k % n();
        return j == 0 ? spec_.state_name(i) : spec_.state_name(i) + "-" + std::to_string(j);
    }

    /// Trapezoid delay integral over the register (node c holds y_{-(m_lag - c)}).
    [[nodiscard]] Eigen::VectorXd integral(const Kernel& a, const Eigen::VectorXd& z) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
        if (a.is_zero()) return out;
        for (int c = 0; c <= mlag_; ++c)
            out += grid_.weight(c) * (a.at_node(c) * z.segment((mlag_ - c) * n(), n()));
        return out;
    }

    /// z' for control u and Brownian increment dW ~ N(0, D I_q).
    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& z, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& dW) const {
        const int N = n();
        const Eigen::VectorXd y0 = z.head(N);
        Eigen::VectorXd next(dim());
        next.head(N) = y0 + spec_.drift(y0, integral(a1_, z), u) * step_ +
                       spec_.diffusion(y0, integral(a2_, z), u) * dW;
        next.tail(dim() - N) = z.head(dim() - N);
        return next;
    }

    /// Cost held over one step, discounted exactly within it: l (1 - e^{-rho D}) / rho.
    /// The plain l D overweights each step by rho D / (1 - e^{-rho D}), 58% at rho D = 1.
    [[nodiscard]] double running_cost(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const {
        return spec_.cost(z.head(n()), u) * cost_weight();
    }
    [[nodiscard]] double cost_weight() const {
        const double r = spec_.rho * step_;
        return r > 1e-12 ? -std::expm1(-r) / spec_.rho : step_;
    }

    /// The register as a lifted state on the chain grid (tail(0) = y_0).
    [[nodiscard]] LiftedState lifted(const Eigen::VectorXd& z) const {
        Eigen::MatrixXd tail(n(), grid_.size());
        for (int c = 0; c <= mlag_; ++c) tail.col(c) = z.segment((mlag_ - c) * n(), n());
        return LiftedState(z.head(n()), Segment(grid_, std::move(tail)));
    }

    /// Register sampling of a lifted state: y_0 = x0, y_{-j} = x1(-j D).
    [[nodiscard]] Eigen::VectorXd register_of(const LiftedState& x) const {
        if (x.dim() != n()) throw DimensionError("LagChain: state dimension mismatch");
        Eigen::VectorXd z(dim());
        z.head(n()) = x.head();
        for (int j = 1; j <= mlag_; ++j) z.segment(j * n(), n()) = x.tail().at(-j * step_);
        return z;
    }

private:
    static int check_lags(int m) {
        if (m < 1) throw ValidationError("LagChain: m_lag must be >= 1");
        return m;
    }

    ProblemSpec spec_;
    int mlag_;
    SegmentGrid grid_;
    Kernel a1_, a2_;
    double step_ = 0.0;
    std::vector<bool> relevant_;
};

[[nodiscard]] inline LagChain reduce_to_lag_chain(const ProblemSpec& spec, int m_lag) { return LagChain(spec, m_lag); }

}  // namespace delayctl
