// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/numerics.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/hjb/arithmetic.hpp"
#include "delayctl/sdde/simulate.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace delayctl {

/// Left-Riemann sum of e^{-rho t_k} l(y_k, u_k) dt over [0, T].
[[nodiscard]] inline double discounted_cost(const SddePath& path, const ProblemSpec& spec, double T) {
    const int KT = exact_steps(T, path.dt, "discounted_cost");
    if (KT > path.steps) throw ValidationError("discounted_cost: path ends before T");
    std::vector<double> terms(KT);
    for (int k = 0; k < KT; ++k)
        terms[k] = std::exp(-spec.rho * path.time(k)) * spec.cost(path.states.col(k), path.controls.col(k)) * path.dt;
    return compensated_sum(terms);
}

struct MonteCarloSettings {
    double T = 1.0;
    double dt = 0.01;
    std::size_t paths = 1000;
    std::uint64_t seed = 0;
    int substeps = 1;             // Brownian substeps per dt (coupling with finer drivers)
    std::uint64_t first_path = 0; // path-index offset, for disjoint streams under one seed
};

/// Per-path discounted costs, index i driven by BrownianDriver(seed, first_path + i).
[[nodiscard]] inline std::vector<double> mc_path_costs(const ProblemSpec& spec, const LiftedState& x,
                                                       const ControlProcess& ctrl, const MonteCarloSettings& s) {
    std::vector<double> costs(s.paths);
    parallel_for(s.paths, [&](std::size_t i) {
        BrownianDriver driver(s.seed, s.first_path + i, spec.q, s.dt, s.substeps);
        costs[i] = discounted_cost(simulate_sdde(spec, x, ctrl, s.T, s.dt, driver), spec, s.T);
    });
    return costs;
}

/// Monte Carlo estimate of J(x; u) truncated at T. Deterministic problems are
/// simulated once and reported with zero standard error.
[[nodiscard]] inline SampleStats mc_cost(const ProblemSpec& spec, const LiftedState& x, const ControlProcess& ctrl,
                                         const MonteCarloSettings& s) {
    if (s.paths < 2) throw ValidationError("mc_cost: need at least two paths");
    if (spec.dynamics.deterministic) {
        BrownianDriver driver(s.seed, s.first_path, spec.q, s.dt, s.substeps);
        return {discounted_cost(simulate_sdde(spec, x, ctrl, s.T, s.dt, driver), spec, s.T), 0.0, s.paths};
    }
    const auto costs = mc_path_costs(spec, x, ctrl, s);
    return sample_stats(costs);
}

/// Horizon after which the tail of the infinite-horizon cost is below tol,
/// using the declared constants: rho_0 from (C, m_cost) and prefactor K C_lambda.
[[nodiscard]] inline double truncation_horizon(const ProblemSpec& spec, double norm_x, double tol) {
    const auto& c = spec.constants;
    return truncation_horizon(spec.rho, rho_zero(c.C, c.m_cost), c.K * c.moment_constant, c.m_cost, norm_x, tol);
}

}  // namespace delayctl
