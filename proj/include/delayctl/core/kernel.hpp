// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace delayctl {

/// Analytic kernel family a(xi) = profile(xi) * selector.
///
/// The selector (h x n) routes the scalar profile onto state components, so a
/// Merton kernel acting on the stock price only is profile * [1 0].
struct KernelPreset {
    std::string name = "zero";  // zero | constant | affine_ramp | sine_bump | exp_ramp
    double scale = 1.0;
    double rate = 1.0;          // exp_ramp only
    Eigen::MatrixXd selector = Eigen::MatrixXd::Ones(1, 1);

    [[nodiscard]] double profile(double xi, double d) const {
        const double s = xi + d;  // distance from the far end, in [0, d]
        if (name == "zero") return 0.0;
        if (name == "constant") return scale;
        if (name == "affine_ramp") return scale * s / d;
        if (name == "sine_bump") return scale * std::sin(std::numbers::pi * s / d);
        if (name == "exp_ramp") return scale * (std::exp(rate * xi) - std::exp(-rate * d));
        throw ValidationError("unknown kernel preset '" + name + "'");
    }
};

/// Delay kernel a : [-d, 0] -> M^{h x n}, tabulated at grid nodes.
class Kernel {
public:
    Kernel(SegmentGrid grid, std::vector<Eigen::MatrixXd> values, std::optional<KernelPreset> preset = std::nullopt)
        : grid_(std::move(grid)), values_(std::move(values)), preset_(std::move(preset)) {
        if (static_cast<int>(values_.size()) != grid_.size())
            throw DimensionError("Kernel: one matrix per grid node required");
        for (const auto& a : values_) {
            if (a.rows() != values_.front().rows() || a.cols() != values_.front().cols())
                throw DimensionError("Kernel: node matrices must share a shape");
        }
    }

    static Kernel from_preset(const KernelPreset& preset, const SegmentGrid& grid) {
        std::vector<Eigen::MatrixXd> v;
        v.reserve(grid.size());
        for (int j = 0; j < grid.size(); ++j)
            v.push_back(preset.profile(grid.node(j), grid.delay()) * preset.selector);
        // exp_ramp evaluates to roundoff at -d; the family is zero there by construction.
        if (preset.name == "exp_ramp") v.front().setZero();
        return Kernel(grid, std::move(v), preset);
    }

    /// Scalar profile table times a selector.
    static Kernel from_table(const SegmentGrid& grid, const std::vector<double>& profile,
                             const Eigen::MatrixXd& selector) {
        if (static_cast<int>(profile.size()) != grid.size())
            throw DimensionError("Kernel: table has " + std::to_string(profile.size()) + " entries, grid has " +
                                 std::to_string(grid.size()) + " nodes");
        std::vector<Eigen::MatrixXd> v;
        v.reserve(profile.size());
        for (double p : profile) v.push_back(p * selector);
        return Kernel(grid, std::move(v));
    }

    static Kernel zero(const SegmentGrid& grid, int rows, int cols) {
        KernelPreset p;
        p.name = "zero";
        p.selector = Eigen::MatrixXd::Zero(rows, cols);
        return from_preset(p, grid);
    }

    [[nodiscard]] const SegmentGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] int rows() const noexcept { return static_cast<int>(values_.front().rows()); }
    [[nodiscard]] int cols() const noexcept { return static_cast<int>(values_.front().cols()); }
    [[nodiscard]] const Eigen::MatrixXd& at_node(int j) const { return values_[j]; }
    [[nodiscard]] const std::optional<KernelPreset>& preset() const noexcept { return preset_; }

    [[nodiscard]] bool is_zero() const {
        for (const auto& a : values_)
            if (!a.isZero(0.0)) return false;
        return true;
    }

    /// Same kernel on another grid: resampled analytically for presets,
    /// piecewise-linearly for tables.
    [[nodiscard]] Kernel on(const SegmentGrid& target) const {
        if (target == grid_) return *this;
        if (!target.same_delay(grid_)) throw DimensionError("Kernel::on: delay mismatch");
        if (preset_) return from_preset(*preset_, target);
        std::vector<Eigen::MatrixXd> v;
        v.reserve(target.size());
        for (int j = 0; j < target.size(); ++j) {
            const double pos = (target.node(j) + grid_.delay()) / grid_.step();
            int k = std::min(static_cast<int>(pos), grid_.intervals() - 1);
            const double theta = std::clamp(pos - k, 0.0, 1.0);
            v.push_back((1.0 - theta) * values_[k] + theta * values_[k + 1]);
        }
        return Kernel(target, std::move(v));
    }

private:
    SegmentGrid grid_;
    std::vector<Eigen::MatrixXd> values_;
    std::optional<KernelPreset> preset_;
};

/// sum_j w_j a(xi_j) s(xi_j)
[[nodiscard]] inline Eigen::VectorXd kernel_convolve(const Kernel& a, const Segment& s) {
    if (a.grid() != s.grid()) throw DimensionError("kernel_convolve: grid mismatch");
    if (a.cols() != s.dim()) throw DimensionError("kernel_convolve: kernel columns != segment dimension");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
    const auto& w = a.grid().weights();
    for (int j = 0; j < a.grid().size(); ++j) out.noalias() += w[j] * (a.at_node(j) * s.values().col(j));
    return out;
}

struct KernelReport {
    bool ok = true;
    double endpoint_norm = 0.0;  // |a(-d)|
    double seminorm = 0.0;       // discrete W^{1,2} seminorm
    std::vector<std::string> violations;
};

/// Checks a(-d) = 0 and a finite discrete W^{1,2} seminorm. Never throws.
[[nodiscard]] inline KernelReport validate_kernel(const Kernel& a) {
    KernelReport r;
    double scale = 0.0;
    for (int j = 0; j < a.grid().size(); ++j) scale = std::max(scale, a.at_node(j).norm());
    r.endpoint_norm = a.at_node(0).norm();
    if (!(r.endpoint_norm <= 1e-12 * std::max(1.0, scale)))
        r.violations.push_back("endpoint: a(-d) = 0 required, |a(-d)| = " + std::to_string(r.endpoint_norm));

    const double h = a.grid().step();
    double acc = 0.0;
    for (int j = 0; j < a.grid().intervals(); ++j) acc += (a.at_node(j + 1) - a.at_node(j)).squaredNorm() / h;
    r.seminorm = std::sqrt(acc);
    if (!std::isfinite(r.seminorm) || !std::isfinite(scale))
        r.violations.push_back("regularity: discrete W^{1,2} seminorm is not finite");

    r.ok = r.violations.empty();
    return r;
}

}  // namespace delayctl
