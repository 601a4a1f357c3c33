// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace delayctl {

/// Random low-frequency trigonometric polynomial on [-d, 0].
struct SmoothProfile {
    double c[4];
    double s[4];

    [[nodiscard]] double operator()(double xi, double d) const {
        double v = 0.0;
        for (int k = 0; k < 4; ++k)
            v += c[k] * std::cos(std::numbers::pi * k * xi / d) + s[k] * std::sin(std::numbers::pi * (k + 1) * xi / d);
        return v;
    }

    static SmoothProfile random(std::mt19937_64& rng) {
        std::normal_distribution<double> N01(0.0, 1.0);
        SmoothProfile p{};
        for (int k = 0; k < 4; ++k) {
            p.c[k] = N01(rng) / (1.0 + k);
            p.s[k] = N01(rng) / (1.0 + k);
        }
        return p;
    }

    /// Scalar state in D(A~): head = tail(0).
    [[nodiscard]] LiftedState state(const SegmentGrid& g) const {
        Eigen::MatrixXd t(1, g.size());
        for (int j = 0; j < g.size(); ++j) t(0, j) = (*this)(g.node(j), g.delay());
        return LiftedState(t.col(g.intervals()), Segment(g, t));
    }
};

/// Tail = independent smooth profiles per component; head random, or tail(0)
/// when the state must lie in D(A~).
inline LiftedState random_smooth_state(const SegmentGrid& g, int n, std::mt19937_64& rng, bool in_domain) {
    Eigen::MatrixXd tail(n, g.size());
    for (int i = 0; i < n; ++i) {
        const SmoothProfile p = SmoothProfile::random(rng);
        for (int j = 0; j < g.size(); ++j) tail(i, j) = p(g.node(j), g.delay());
    }
    Eigen::VectorXd head(n);
    std::normal_distribution<double> N01(0.0, 1.0);
    if (in_domain)
        head = tail.col(g.intervals());
    else
        for (int i = 0; i < n; ++i) head[i] = N01(rng);
    return LiftedState(head, Segment(g, tail));
}

}  // namespace delayctl
