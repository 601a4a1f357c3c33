// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace delayctl {

/// Uniform axis; count = 1 makes the axis degenerate (a single node at min).
struct Axis {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    int count = 1;

    [[nodiscard]] bool degenerate() const noexcept { return count == 1; }
    [[nodiscard]] double spacing() const noexcept { return count > 1 ? (max - min) / (count - 1) : 0.0; }
    [[nodiscard]] double node(int i) const noexcept { return count > 1 ? min + i * spacing() : min; }
};

/// Tensor-product grid, first axis fastest in the flat node index.
class TensorGrid {
public:
    TensorGrid() = default;
    explicit TensorGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        if (axes_.empty()) throw ValidationError("TensorGrid: no axes");
        std::size_t s = 1;
        for (const auto& a : axes_) {
            if (a.count < 1) throw ValidationError("TensorGrid: axis " + a.name + " needs count >= 1");
            if (a.count > 1 && !(a.max > a.min))
                throw ValidationError("TensorGrid: axis " + a.name + " needs max > min");
            if (!std::isfinite(a.min) || !std::isfinite(a.max))
                throw ValidationError("TensorGrid: axis " + a.name + " bounds must be finite");
            strides_.push_back(s);
            s *= static_cast<std::size_t>(a.count);
        }
        size_ = s;
    }

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(axes_.size()); }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] const std::vector<Axis>& axes() const noexcept { return axes_; }
    [[nodiscard]] const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] std::size_t stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }

    [[nodiscard]] int index_along(std::size_t node, int k) const {
        return static_cast<int>((node / strides_[static_cast<std::size_t>(k)]) % static_cast<std::size_t>(axis(k).count));
    }

    [[nodiscard]] Eigen::VectorXd point(std::size_t node) const {
        Eigen::VectorXd z(dim());
        for (int k = 0; k < dim(); ++k) z[k] = axis(k).node(index_along(node, k));
        return z;
    }

    /// True when z lies outside the box along a non-degenerate axis.
    [[nodiscard]] bool outside(const Eigen::VectorXd& z) const {
        for (int k = 0; k < dim(); ++k) {
            const Axis& a = axis(k);
            if (!a.degenerate() && (z[k] < a.min - 1e-12 * a.spacing() || z[k] > a.max + 1e-12 * a.spacing()))
                return true;
        }
        return false;
    }

    /// Calls f(node, weight) for each corner of the multilinear stencil at z
    /// (clamped to the box). Returns true when clamping was needed.
    template <typename F>
    bool for_each_corner(const Eigen::VectorXd& z, F&& f) const {
        if (z.size() != dim()) throw DimensionError("TensorGrid: point dimension mismatch");
        double th[16];
        int active[16];
        int na = 0;
        bool clamped = false;
        std::size_t base = 0;
        if (dim() > 16) throw ValidationError("TensorGrid: at most 16 axes");
        for (int k = 0; k < dim(); ++k) {
            const Axis& a = axis(k);
            if (a.degenerate()) continue;
            double pos = (z[k] - a.min) / a.spacing();
            if (pos < 0.0 || pos > a.count - 1) {
                if (pos < -1e-12 || pos > a.count - 1 + 1e-12) clamped = true;
                pos = std::clamp(pos, 0.0, static_cast<double>(a.count - 1));
            }
            int i = std::min(static_cast<int>(pos), a.count - 2);
            th[k] = pos - i;
            base += static_cast<std::size_t>(i) * stride(k);
            active[na++] = k;
        }
        const int corners = 1 << na;
        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            std::size_t node = base;
            for (int b = 0; b < na; ++b) {
                const int k = active[b];
                if (c & (1 << b)) {
                    w *= th[k];
                    node += stride(k);
                } else {
                    w *= 1.0 - th[k];
                }
            }
            if (w != 0.0) f(node, w);
        }
        return clamped;
    }

    /// Node closest to z (clamped), for piecewise-constant lookups.
    [[nodiscard]] std::size_t nearest(const Eigen::VectorXd& z) const {
        std::size_t node = 0;
        for (int k = 0; k < dim(); ++k) {
            const Axis& a = axis(k);
            if (a.degenerate()) continue;
            const double pos = std::clamp((z[k] - a.min) / a.spacing(), 0.0, static_cast<double>(a.count - 1));
            node += static_cast<std::size_t>(std::lround(pos)) * stride(k);
        }
        return node;
    }

    [[nodiscard]] bool operator==(const TensorGrid& o) const {
        if (axes_.size() != o.axes_.size()) return false;
        for (std::size_t k = 0; k < axes_.size(); ++k)
            if (axes_[k].min != o.axes_[k].min || axes_[k].max != o.axes_[k].max || axes_[k].count != o.axes_[k].count)
                return false;
        return true;
    }

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// Nodal values with multilinear interpolation (exact at nodes, clamped outside).
struct ValueField {
    TensorGrid grid;
    Eigen::VectorXd values;

    [[nodiscard]] double operator()(const Eigen::VectorXd& z) const {
        double v = 0.0;
        grid.for_each_corner(z, [&](std::size_t node, double w) { v += w * values[static_cast<Eigen::Index>(node)]; });
        return v;
    }

    [[nodiscard]] bool finite() const { return values.allFinite(); }
};

/// Control index per node; lookups use the nearest node.
struct PolicyField {
    TensorGrid grid;
    std::vector<std::size_t> index;

    [[nodiscard]] std::size_t at(const Eigen::VectorXd& z) const { return index[grid.nearest(z)]; }
};

}  // namespace delayctl
