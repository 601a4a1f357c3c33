// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/numerics.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/hjb/value_field.hpp"
#include "delayctl/operators/lifted_ops.hpp"
#include "delayctl/sdde/cost.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace delayctl {

/// How much the regularity probe may claim for a problem.
enum class RegularityClaim {
    Asserted,       // ellipticity floor declared
    Empirical,      // noisy but degenerate diffusion: alpha is measured, not guaranteed
    LipschitzOnly,  // deterministic: no second-order smoothing to speak of
};

[[nodiscard]] inline RegularityClaim regularity_claim(const ProblemSpec& spec) {
    if (spec.dynamics.deterministic) return RegularityClaim::LipschitzOnly;
    return spec.constants.lambda_R ? RegularityClaim::Asserted : RegularityClaim::Empirical;
}

[[nodiscard]] inline const char* to_string(RegularityClaim c) {
    switch (c) {
        case RegularityClaim::Asserted: return "asserted";
        case RegularityClaim::Empirical: return "empirical";
        case RegularityClaim::LipschitzOnly: return "lipschitz-only";
    }
    return "?";
}

struct HolderScale {
    double separation = 0.0;
    double jump = 0.0;  // max |grad V(x) - grad V(x')| over pairs at this separation
};

struct RegularityReport {
    RegularityClaim claim = RegularityClaim::Empirical;
    double lipschitz = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double alpha_se = std::numeric_limits<double>::quiet_NaN();
    bool kink = false;          // gradient jump does not shrink with the separation
    bool inconclusive = false;  // too few scales or jumps below the noise floor
    std::vector<HolderScale> scales;

    [[nodiscard]] double alpha_lo() const { return alpha - 2.0 * alpha_se; }
    [[nodiscard]] double alpha_hi() const { return alpha + 2.0 * alpha_se; }
};

using HeadEstimator = std::function<double(const Eigen::VectorXd& x0)>;

/// Samples V on the head box, returns the largest difference quotient between
/// neighbours and a log-log fit of the central-difference gradient jump against
/// the separation (separations 2h, 4h, ...; the 2h stencil overlap is skipped).
/// `noise` is the estimator's standard error; jumps within 4 noise/h are not trusted.
[[nodiscard]] inline RegularityReport regularity_probe(const std::vector<Axis>& box, const HeadEstimator& V,
                                                       RegularityClaim claim, double noise = 0.0) {
    const TensorGrid g(box);
    const int D = g.dim();
    for (const auto& a : box)
        if (!a.degenerate() && a.count < 5) throw ValidationError("regularity_probe: axis " + a.name + " needs >= 5 nodes");
    RegularityReport r;
    r.claim = claim;
    Eigen::VectorXd vals(static_cast<Eigen::Index>(g.size()));
    parallel_for(g.size(), [&](std::size_t node) { vals[static_cast<Eigen::Index>(node)] = V(g.point(node)); });
    if (!vals.allFinite()) throw NumericalError("regularity_probe: estimator returned a non-finite value");

    for (std::size_t node = 0; node < g.size(); ++node)
        for (int k = 0; k < D; ++k) {
            const Axis& a = g.axis(k);
            if (a.degenerate() || g.index_along(node, k) == a.count - 1) continue;
            const double q = std::abs(vals[static_cast<Eigen::Index>(node + g.stride(k))] -
                                      vals[static_cast<Eigen::Index>(node)]) / a.spacing();
            r.lipschitz = std::max(r.lipschitz, q);
        }
    if (claim == RegularityClaim::LipschitzOnly) return r;

    // Central-difference gradients at nodes interior along every active axis.
    const auto interior = [&](std::size_t node) {
        for (int k = 0; k < D; ++k) {
            const Axis& a = g.axis(k);
            const int i = g.index_along(node, k);
            if (!a.degenerate() && (i == 0 || i == a.count - 1)) return false;
        }
        return true;
    };
    std::vector<Eigen::VectorXd> grad(g.size());
    double hmin = std::numeric_limits<double>::infinity();
    int span = std::numeric_limits<int>::max();
    for (int k = 0; k < D; ++k)
        if (!g.axis(k).degenerate()) {
            hmin = std::min(hmin, g.axis(k).spacing());
            span = std::min(span, g.axis(k).count - 3);
        }
    for (std::size_t node = 0; node < g.size(); ++node) {
        if (!interior(node)) continue;
        Eigen::VectorXd gr = Eigen::VectorXd::Zero(D);
        for (int k = 0; k < D; ++k) {
            const Axis& a = g.axis(k);
            if (a.degenerate()) continue;
            gr[k] = (vals[static_cast<Eigen::Index>(node + g.stride(k))] -
                     vals[static_cast<Eigen::Index>(node - g.stride(k))]) / (2.0 * a.spacing());
        }
        grad[node] = gr;
    }
    for (int step = 2; step <= span; step *= 2) {
        HolderScale sc;
        sc.separation = step * hmin;
        for (std::size_t node = 0; node < g.size(); ++node) {
            if (!interior(node)) continue;
            for (int k = 0; k < D; ++k) {
                const Axis& a = g.axis(k);
                if (a.degenerate() || std::abs(a.spacing() - hmin) > 1e-12 * hmin) continue;
                const int i = g.index_along(node, k);
                if (i + step > a.count - 2) continue;
                const std::size_t other = node + static_cast<std::size_t>(step) * g.stride(k);
                sc.jump = std::max(sc.jump, (grad[node] - grad[other]).norm());
            }
        }
        r.scales.push_back(sc);
    }
    if (r.scales.size() < 2) {
        r.inconclusive = true;
        return r;
    }
    const double floor = 4.0 * noise / hmin;
    bool flat = true;
    for (const auto& sc : r.scales) flat = flat && sc.jump <= 1e-12 * (1.0 + r.lipschitz);
    if (flat) {
        // Affine in x0: the gradient is constant, which is C^{1,1}.
        r.alpha = 1.0;
        r.alpha_se = 0.0;
        r.inconclusive = noise > 0.0;
        return r;
    }
    std::vector<double> lx, ly;
    for (const auto& sc : r.scales) {
        if (!(sc.jump > floor) || sc.jump <= 0.0) continue;
        lx.push_back(std::log(sc.separation));
        ly.push_back(std::log(sc.jump));
    }
    for (std::size_t j = 0; j + 1 < r.scales.size(); ++j)
        if (r.scales[j + 1].jump > 0.0 && r.scales[j].jump / r.scales[j + 1].jump > 0.9) r.kink = true;
    if (lx.size() < 2) {
        r.inconclusive = true;
        return r;
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        mx += lx[j] / n;
        my += ly[j] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        sxx += (lx[j] - mx) * (lx[j] - mx);
        sxy += (lx[j] - mx) * (ly[j] - my);
    }
    r.alpha = sxy / sxx;
    double sse = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        const double e = ly[j] - (my + r.alpha * (lx[j] - mx));
        sse += e * e;
    }
    r.alpha_se = lx.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    r.inconclusive = lx.size() < r.scales.size();
    return r;
}

struct StatePair {
    LiftedState x;
    LiftedState y;
};

struct PairEstimate {
    double difference = 0.0;  // |V(x) - V(y)|
    double std_error = 0.0;
};

using PairEstimator = std::function<PairEstimate(const LiftedState&, const LiftedState&)>;

struct BContinuityRow {
    double distance = 0.0;  // |x - y|_{-1}
    double difference = 0.0;
    double std_error = 0.0;
};

struct BContinuityReport {
    std::vector<BContinuityRow> rows;      // sorted by distance
    std::vector<BContinuityRow> envelope;  // per distance bin: the row with the largest difference
    bool monotone = true;                  // envelope nondecreasing within 2 stderr
    bool vanishing = true;                 // envelope extrapolated to distance 0 within 2 stderr + tol
    double intercept = 0.0;                // of the least-squares line through the envelope
    double intercept_se = 0.0;
};

/// Pairs (x, x + c sin(2 pi N xi / d)) in the tail of component `component`:
/// the perturbation is large in L2 but small in |.|_{-1} for large N.
[[nodiscard]] inline std::vector<StatePair> oscillatory_pairs(const LiftedState& x, double amplitude,
                                                              const std::vector<int>& frequencies, int component = 0) {
    const SegmentGrid& g = x.grid();
    std::vector<StatePair> out;
    for (int N : frequencies) {
        if (N < 0) throw ValidationError("oscillatory_pairs: negative frequency");
        LiftedState y = x;
        for (int j = 0; j < g.size(); ++j)
            y.tail().values()(component, j) += amplitude * std::sin(2.0 * std::numbers::pi * N * g.node(j) / g.delay());
        out.push_back({x, std::move(y)});
    }
    return out;
}

/// Tabulates |V(x) - V(y)| against |x - y|_{-1} and checks the envelope shape.
/// Pairs must lie in the ball of the given radius; `tol` absorbs discretization bias.
[[nodiscard]] inline BContinuityReport b_continuity_probe(const std::vector<StatePair>& pairs,
                                                          const PairEstimator& estimate, double radius,
                                                          int bins = 4, double tol = 0.0) {
    if (pairs.empty()) throw ValidationError("b_continuity_probe: no pairs");
    if (bins < 1) throw ValidationError("b_continuity_probe: bins must be >= 1");
    BContinuityReport r;
    for (const auto& p : pairs) {
        if (lifted_norm(p.x) > radius || lifted_norm(p.y) > radius)
            throw DomainError("b_continuity_probe: pair outside the declared radius");
        LiftedState diff = p.x;
        diff -= p.y;
        const PairEstimate e = estimate(p.x, p.y);
        r.rows.push_back({minus_one_norm(diff), e.difference, e.std_error});
    }
    std::stable_sort(r.rows.begin(), r.rows.end(),
                     [](const BContinuityRow& a, const BContinuityRow& b) { return a.distance < b.distance; });
    // Coincident pairs carry no information about the modulus; they stay in `rows` only.
    std::size_t first = 0;
    while (first < r.rows.size() && r.rows[first].distance <= 0.0) ++first;
    const std::size_t P = r.rows.size() - first;
    if (P == 0) return r;
    const std::size_t B = std::min<std::size_t>(static_cast<std::size_t>(bins), P);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t lo = first + P * b / B, hi = first + P * (b + 1) / B;
        BContinuityRow top = r.rows[lo];
        for (std::size_t i = lo; i < hi; ++i)
            if (r.rows[i].difference > top.difference) top = r.rows[i];
        top.distance = r.rows[hi - 1].distance;
        r.envelope.push_back(top);
    }
    for (std::size_t b = 0; b + 1 < r.envelope.size(); ++b) {
        const auto& a = r.envelope[b];
        const auto& c = r.envelope[b + 1];
        if (a.difference > c.difference + 2.0 * (a.std_error + c.std_error) + tol) r.monotone = false;
    }
    const auto& e = r.envelope;
    if (e.size() == 1) {
        r.vanishing = e.front().difference <= 2.0 * e.front().std_error + tol;
        return r;
    }
    // Least-squares line through the envelope, extrapolated to distance 0. The intercept's
    // standard error combines the Monte Carlo errors with the scatter about the line.
    const double n = static_cast<double>(e.size());
    double xbar = 0.0, ybar = 0.0;
    for (const auto& row : e) xbar += row.distance / n, ybar += row.difference / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& row : e) {
        sxx += (row.distance - xbar) * (row.distance - xbar);
        sxy += (row.distance - xbar) * (row.difference - ybar);
    }
    if (!(sxx > 0.0)) {
        r.vanishing = e.front().difference <= 2.0 * e.front().std_error + tol;
        return r;
    }
    const double slope = sxy / sxx, intercept = ybar - slope * xbar;
    double var = 0.0, ss = 0.0;
    for (const auto& row : e) {
        const double c = 1.0 / n - xbar * (row.distance - xbar) / sxx;
        var += c * c * row.std_error * row.std_error;
        const double res = row.difference - intercept - slope * row.distance;
        ss += res * res;
    }
    if (e.size() > 2) var += ss / (n - 2.0) * (1.0 / n + xbar * xbar / sxx);
    r.intercept = intercept;
    r.intercept_se = std::sqrt(var);
    r.vanishing = intercept <= 2.0 * r.intercept_se + tol;
    return r;
}

/// Pair estimator from closed-loop Monte Carlo costs with common random numbers.
[[nodiscard]] inline PairEstimator mc_pair_estimator(const ProblemSpec& spec, ControlProcess ctrl,
                                                     MonteCarloSettings s) {
    return [spec, ctrl = std::move(ctrl), s](const LiftedState& x, const LiftedState& y) {
        if (spec.dynamics.deterministic) {
            MonteCarloSettings one = s;
            one.paths = 2;
            const double d = mc_cost(spec, x, ctrl, one).mean - mc_cost(spec, y, ctrl, one).mean;
            return PairEstimate{std::abs(d), 0.0};
        }
        const auto cx = mc_path_costs(spec, x, ctrl, s);
        const auto cy = mc_path_costs(spec, y, ctrl, s);
        std::vector<double> d(cx.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = cx[i] - cy[i];
        const SampleStats st = sample_stats(d);
        return PairEstimate{std::abs(st.mean), st.std_error};
    };
}

}  // namespace delayctl
