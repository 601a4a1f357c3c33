// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/numerics.hpp"
#include "delayctl/lift/mild.hpp"
#include "delayctl/sdde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace delayctl {

/// Mismatch between the direct and the lifted simulation at one resolution.
struct EquivalenceLevel {
    double dt = 0.0;
    int intervals = 0;
    double head_mismatch = 0.0;  // mean over paths of sup_k |Y0_k - y_k|
    double tail_mismatch = 0.0;  // mean over paths of sup_k |Y1_k - y(t_k + .)|_{L2}
    double scale = 1.0;          // 1 + max |y| over all paths and steps

    [[nodiscard]] double head_relative() const { return head_mismatch / scale; }
};

struct EquivalenceReport {
    EquivalenceLevel coarse;
    EquivalenceLevel fine;  // (dt/2, 2m) on the same Brownian paths

    [[nodiscard]] double head_ratio() const { return ratio(coarse.head_mismatch, fine.head_mismatch); }
    [[nodiscard]] double tail_ratio() const { return ratio(coarse.tail_mismatch, fine.tail_mismatch); }

private:
    static double ratio(double a, double b) {
        if (b > 0.0) return a / b;
        return a > 0.0 ? INFINITY : 1.0;
    }
};

namespace detail {

inline EquivalenceLevel equivalence_level(const ProblemSpec& spec, const LiftedState& x, const ControlProcess& ctrl,
                                          double T, double dt, int substeps, std::uint64_t seed, std::size_t paths,
                                          MildTail scheme) {
    const SegmentGrid& g = spec.grid;
    std::vector<double> head(paths), tail(paths), scale(paths);
    parallel_for(paths, [&](std::size_t p) {
        BrownianDriver d1(seed, p, spec.q, dt, substeps), d2(seed, p, spec.q, dt, substeps);
        const SddePath direct = simulate_sdde(spec, x, ctrl, T, dt, d1);
        const LiftedPath mild = simulate_mild(spec, x, ctrl, T, dt, d2, scheme);
        double hm = 0.0, tm = 0.0, ym = 0.0;
        for (int k = 0; k <= direct.steps; ++k) {
            hm = std::max(hm, (mild.heads.col(k) - direct.states.col(k)).norm());
            ym = std::max(ym, direct.states.col(k).norm());
            Segment diff = mild.state(k).tail();
            diff.values() -= lift_history(direct, direct.time(k), g).tail().values();
            tm = std::max(tm, segment_norm(diff));
        }
        head[p] = hm;
        tail[p] = tm;
        scale[p] = 1.0 + ym;
    });
    EquivalenceLevel lv;
    lv.dt = dt;
    lv.intervals = g.intervals();
    lv.head_mismatch = sample_stats(head).mean;
    lv.tail_mismatch = sample_stats(tail).mean;
    lv.scale = *std::max_element(scale.begin(), scale.end());
    return lv;
}

}  // namespace detail

/// Runs the direct and the lifted simulator on shared Brownian paths at (dt, m)
/// and again at (dt/2, 2m). The coarse level draws two substeps per step so
/// both levels see the same Brownian path.
[[nodiscard]] inline EquivalenceReport equivalence_report(const ProblemSpec& spec, const LiftedState& x,
                                                          const ControlProcess& ctrl, double T, double dt,
                                                          std::uint64_t seed, std::size_t paths = 1,
                                                          MildTail scheme = MildTail::Nodal) {
    if (paths < 1) throw ValidationError("equivalence_report: need at least one path");
    EquivalenceReport r;
    r.coarse = detail::equivalence_level(spec, x, ctrl, T, dt, 2, seed, paths, scheme);
    const ProblemSpec fine = spec.on_grid(SegmentGrid(spec.delay(), 2 * spec.grid.intervals()));
    r.fine = detail::equivalence_level(fine, x, ctrl, T, 0.5 * dt, 1, seed, paths, scheme);
    return r;
}

}  // namespace delayctl
