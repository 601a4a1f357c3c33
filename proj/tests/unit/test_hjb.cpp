// SPDX-License-Identifier: MIT
#include "delayctl/hjb/arithmetic.hpp"
#include "delayctl/hjb/diagnostics.hpp"
#include "delayctl/hjb/feedback.hpp"
#include "delayctl/hjb/hamiltonian.hpp"
#include "delayctl/hjb/lag_chain.hpp"
#include "delayctl/hjb/probes.hpp"
#include "delayctl/hjb/solver.hpp"
#include "delayctl/models/advertising.hpp"
#include "delayctl/models/affine.hpp"
#include "delayctl/models/merton.hpp"
#include "delayctl/operators/spectral.hpp"
#include "delayctl/sdde/cost.hpp"
#include "delayctl/sdde/simulate.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace delayctl;

namespace {

ProblemSpec advertising(double sigma, int controls = 11, double d = 1.0, int m = 20) {
    AdvertisingParams p;
    p.sigma0 = sigma;
    p.control_count = controls;
    return build_advertising(p, SegmentGrid(d, m));
}

ProblemSpec merton_desk() {
    return build_merton(MertonParams{}, SegmentGrid(0.1, 4));
}

TensorGrid merton_grid(const LagChain& chain, int nz = 2001) {
    return chain_grid(chain, {{"s", 1.0, 1.0, 1}, {"z", 0.0, 40.0, nz}, {"s-1", 1.0, 1.0, 1}});
}

ProblemSpec unit_cost(ProblemSpec s) {
    s.dynamics.cost = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; };
    return s;
}

LiftedState constant_state(const SegmentGrid& g, const Eigen::VectorXd& v) {
    Eigen::MatrixXd t = v.replicate(1, g.size());
    return LiftedState(v, Segment(g, std::move(t)));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(Arithmetic, RhoZeroCases) {
    EXPECT_DOUBLE_EQ(rho_zero(3.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(rho_zero(1.0, 2.0), 3.0);
    EXPECT_DOUBLE_EQ(rho_zero(2.0, 1.0), 4.0);
    EXPECT_THROW((void)rho_zero(-1.0, 1.0), ValidationError);
}

TEST(Arithmetic, AdmissibleGrowthCases) {
    const auto lin = admissible_growth_k(1.0, 1.0);
    EXPECT_EQ(lin.active, GrowthCase::Linear);
    EXPECT_NEAR(lin.bound, 2.0 / 3.0, 1e-15);
    const auto quad = admissible_growth_k(10.0, 1.0);
    EXPECT_EQ(quad.active, GrowthCase::Quadratic);
    EXPECT_NEAR(quad.bound, 4.0, 1e-12);
    double prev = 0.0;
    for (double rho : {0.1, 1.0, 10.0, 100.0, 1e4}) {
        const double k = admissible_growth_k(rho, 1.0).bound;
        EXPECT_GT(k, prev);
        prev = k;
    }
}

TEST(Arithmetic, LipschitzThresholdIsMonotone) {
    EXPECT_DOUBLE_EQ(lipschitz_discount_threshold(0.0, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(lipschitz_discount_threshold(1.0, 2.0), 2.0);
    for (double c = 0.0; c < 3.0; c += 0.25)
        for (double b = 0.0; b < 3.0; b += 0.25) {
            EXPECT_LT(lipschitz_discount_threshold(c, b), lipschitz_discount_threshold(c + 0.25, b));
            EXPECT_LE(lipschitz_discount_threshold(c, b), lipschitz_discount_threshold(c, b + 0.25));
        }
}

TEST(Hamiltonian, SingletonHasNoMaximisation) {
    const ProblemSpec s = advertising(0.2, 1);
    std::mt19937_64 rng(3);
    const LiftedState x = fixtures::random_smooth_state(s.grid, 1, rng, false);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.7);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(1, 1, -1.3);
    const Eigen::VectorXd u = s.controls[0];
    const Eigen::VectorXd I1 = kernel_convolve(s.a1, x.tail()), I2 = kernel_convolve(s.a2, x.tail());
    const Eigen::MatrixXd sig = s.diffusion(x.head(), I2, u);
    const double expect = -x.head().dot(p) - s.drift(x.head(), I1, u).dot(p) -
                          0.5 * (sig * sig.transpose() * Z).trace() - s.cost(x.head(), u);
    const auto h = hamiltonian(s, x, p, Z);
    EXPECT_NEAR(h.value, expect, 1e-12);
    EXPECT_EQ(h.argmax, 0u);
    EXPECT_THROW((void)hamiltonian(s, x, p, (Eigen::MatrixXd(1, 1) << 1).finished().replicate(2, 2)), DimensionError);
}

TEST(Hamiltonian, RejectsAsymmetricZ) {
    AffineTestParams p;
    p.n = 2;
    p.s_floor = 0.3;
    const ProblemSpec s = build_affine_test(p, SegmentGrid(1.0, 10));
    const LiftedState x = LiftedState::zero(s.grid, 2);
    Eigen::MatrixXd Z(2, 2);
    Z << 1, 2, 0, 1;
    EXPECT_THROW((void)hamiltonian(s, x, Eigen::VectorXd::Zero(2), Z), ValidationError);
}

TEST(Hamiltonian, MonotoneInZ) {
    AffineTestParams p;
    p.n = 2;
    p.b_x = -0.5;
    p.b_u = 1.0;
    p.s_const = 0.4;
    p.s_x = 0.3;
    p.s_floor = 0.1;
    p.c_x = 1.0;
    p.c_u = 0.5;
    p.control_count = 5;
    const ProblemSpec s = build_affine_test(p, SegmentGrid(1.0, 16));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N01(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const LiftedState x = fixtures::random_smooth_state(s.grid, 2, rng, false);
        const Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(2, [&] { return N01(rng); });
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return N01(rng); });
        const Eigen::MatrixXd Z = 0.5 * (A + A.transpose());
        A = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return N01(rng); });
        const Eigen::MatrixXd Zp = Z + A * A.transpose();  // Zp >= Z
        EXPECT_LE(hamiltonian(s, x, q, Zp).value, hamiltonian(s, x, q, Z).value + 1e-12);
    }
}

TEST(Hamiltonian, PerturbationBound) {
    // -x0.p0 contributes |x0||q0| on top of the b0 term, so the bound carries C + 1.
    const ProblemSpec s = advertising(0.3);
    const double C = s.constants.C;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> N01(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const LiftedState x = fixtures::random_smooth_state(s.grid, 1, rng, false);
        const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, N01(rng));
        const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, N01(rng));
        const Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(1, 1, N01(rng));
        const Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(1, 1, N01(rng));
        const double r = 1.0 + lifted_norm(x);
        const double lhs = std::abs(hamiltonian(s, x, p + q, Y + Z).value - hamiltonian(s, x, p, Y).value);
        const double rhs = (C + 1.0) * r * q.norm() + 0.5 * C * C * r * r * Z.norm();
        EXPECT_LE(lhs, rhs + 1e-12);
    }
}

TEST(Hamiltonian, SpectralTailBlockVanishes) {
    AffineTestParams p;
    p.s_const = 0.5;
    p.b_u = 1.0;
    p.c_u = 1.0;
    const ProblemSpec s = build_affine_test(p, SegmentGrid(1.0, 20));
    const auto B = spectral_B(assemble_B(s.grid, 1));
    std::mt19937_64 rng(5);
    const LiftedState x = fixtures::random_smooth_state(s.grid, 1, rng, false);
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(1, 0.4);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(1, 1, 0.2);
    const double base = hamiltonian(s, x, p0, Z).value;
    double prev = INFINITY;
    for (int N = 0; N <= B.dim(); N += 3) {
        const double gap = std::abs(hamiltonian(s, x, p0, Z + bq_head_block(B, N)).value - base);
        EXPECT_LE(gap, prev + 1e-14);
        prev = gap;
    }
    EXPECT_EQ(hamiltonian(s, x, p0, Z + bq_head_block(B, B.dim())).value, base);
    EXPECT_GT(std::abs(hamiltonian(s, x, p0, Z + bq_head_block(B, 0)).value - base), 1e-3);
}

TEST(LagChain, SingleLagUsesTwoNodeTrapezoid) {
    const ProblemSpec s = advertising(0.0, 3, 1.0, 20);
    const LagChain chain(s, 1);
    Eigen::VectorXd z(2);
    z << 0.8, -0.3;  // y0, y_{-1}
    const SegmentGrid g1(1.0, 1);
    Eigen::MatrixXd tail(1, 2);
    tail << -0.3, 0.8;
    const Eigen::VectorXd ref = kernel_convolve(s.a1.on(g1), Segment(g1, tail));
    EXPECT_NEAR(chain.integral(chain.a1(), z)[0], ref[0], 1e-15);
    // affine_ramp vanishes at -d: only the lag-0 node contributes, with weight d/2.
    EXPECT_NEAR(ref[0], 0.5 * s.a1.at_node(s.grid.intervals())(0, 0) * 0.8, 1e-15);
    EXPECT_EQ(chain.dim(), 2);
    EXPECT_EQ(chain.coordinate_name(0), "y");
    EXPECT_EQ(chain.coordinate_name(1), "y-1");
    EXPECT_FALSE(chain.relevant(1));  // the kernel is zero at the only lag node
    EXPECT_THROW(LagChain(s, 0), ValidationError);
}

TEST(LagChain, DeterministicRecursion) {
    const ProblemSpec s = advertising(0.0, 3, 1.0, 20);
    const LagChain chain(s, 4);
    const double D = chain.step();
    Eigen::VectorXd z(5);
    z << 1.0, 0.5, 0.0, -0.5, -1.0;
    const Eigen::VectorXd u = s.controls[2];
    for (int k = 0; k < 10; ++k) {
        double I = 0.0;
        for (int c = 0; c <= 4; ++c) I += chain.grid().weight(c) * chain.a1().at_node(c)(0, 0) * z[4 - c];
        Eigen::VectorXd expect(5);
        expect[0] = z[0] + (-0.5 * z[0] + I + 1.0 * u[0]) * D;
        expect.tail(4) = z.head(4);
        const Eigen::VectorXd next = chain.step(z, u, Eigen::VectorXd::Constant(1, 123.0));
        EXPECT_NEAR((next - expect).cwiseAbs().maxCoeff(), 0.0, 1e-14);
        z = next;
    }
}

TEST(LagChain, MatchesSimulatorWhenGridsCoincide) {
    const int m = 20;
    const ProblemSpec s = advertising(0.3, 3, 1.0, m);
    const LagChain chain(s, m);
    std::mt19937_64 rng(7);
    const LiftedState x = fixtures::random_smooth_state(s.grid, 1, rng, true);
    const double D = chain.step();
    const ControlProcess ctrl = ControlProcess::constant(s.controls[1]);
    BrownianDriver d1(99, 0, 1, D), d2(99, 0, 1, D);
    const SddePath path = simulate_sdde(s, x, ctrl, 2.0, D, d1);
    Eigen::VectorXd z = chain.register_of(x);
    for (int k = 0; k < path.steps; ++k) {
        EXPECT_NEAR(z[0], path.states(0, k), 1e-12 * (1.0 + std::abs(z[0])));
        z = chain.step(z, s.controls[1], d2.next());
    }
    EXPECT_NEAR(z[0], path.states(0, path.steps), 1e-12 * (1.0 + std::abs(z[0])));
}

TEST(TensorGrid, InterpolatesAffineFunctionsExactly) {
    const TensorGrid g({{"a", -1.0, 1.0, 5}, {"b", 0.0, 2.0, 3}, {"c", 3.0, 3.0, 1}});
    EXPECT_EQ(g.size(), 15u);
    Eigen::VectorXd v(15);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Eigen::VectorXd p = g.point(i);
        v[static_cast<Eigen::Index>(i)] = 2.0 * p[0] - 3.0 * p[1] + 1.0;
    }
    const ValueField f{g, v};
    Eigen::VectorXd z(3);
    z << 0.37, 1.21, 99.0;  // degenerate axis ignores the coordinate
    EXPECT_NEAR(f(z), 2.0 * 0.37 - 3.0 * 1.21 + 1.0, 1e-14);
    EXPECT_FALSE(g.outside(z));
    z << 1.5, 1.0, 3.0;
    EXPECT_TRUE(g.outside(z));
    EXPECT_NEAR(f(z), 2.0 * 1.0 - 3.0 + 1.0, 1e-14);  // clamped
    EXPECT_THROW(TensorGrid({{"a", 1.0, 0.0, 3}}), ValidationError);
}

TEST(ChainGrid, DefaultsLagAxes) {
    const ProblemSpec s = advertising(0.2);
    const LagChain chain(s, 2);
    const TensorGrid g = chain_grid(chain, {{"y", -1.0, 3.0, 9}});
    ASSERT_EQ(g.dim(), 3);
    EXPECT_EQ(g.axis(1).name, "y-1");
    EXPECT_EQ(g.axis(1).count, 9);  // the ramp is nonzero at lag 1
    EXPECT_EQ(g.axis(2).count, 1);  // and zero at lag 2
    EXPECT_THROW((void)chain_grid(chain, {{"w", 0.0, 1.0, 3}}), ValidationError);
    EXPECT_THROW((void)chain_grid(chain, {{"y", -1.0, 3.0, 9}, {"q", 0.0, 1.0, 3}}), ValidationError);
}

TEST(ValueIteration, UnitCostFixedPoint) {
    for (double D : {0.5, 0.1, 0.02}) {
        const ProblemSpec s = unit_cost(advertising(0.2, 3, D, 10));
        const LagChain chain(s, 1);
        const TensorGrid g = chain_grid(chain, {{"y", -1.0, 3.0, 9}});
        ValueIterationSettings vs;
        vs.tol = 1e-10;
        const auto r = value_iteration(chain, g, vs);
        // Exact in-step discounting: the fixed point is 1/rho for every step size.
        EXPECT_NEAR(r.value.values.maxCoeff(), 1.0 / s.rho, 1e-8);
        EXPECT_NEAR(r.value.values.minCoeff(), 1.0 / s.rho, 1e-8);
    }
}

TEST(ValueIteration, SuccessiveDifferencesContract) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}));
    const double beta = chain.discount();
    ASSERT_GT(r.residuals.size(), 3u);
    for (std::size_t k = 1; k < r.residuals.size(); ++k)
        EXPECT_LE(r.residuals[k], beta * r.residuals[k - 1] * (1.0 + 1e-9) + 1e-13);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_TRUE(r.value.finite());
}

TEST(ValueIteration, NonConvergenceCarriesResidual) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 1);
    ValueIterationSettings vs;
    vs.max_iter = 3;
    try {
        (void)value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 9}}), vs);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.residual(), vs.tol);
    }
}

TEST(ValueIteration, ClampRateWarning) {
    const ProblemSpec s = advertising(2.0);
    const LagChain chain(s, 1);
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", 0.0, 0.2, 5}}));
    EXPECT_GT(r.clamp_rate, 0.2);
    ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(ValueIteration, OnTheFlyMatchesStoredStencils) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    const TensorGrid g = chain_grid(chain, {{"y", -1.0, 3.0, 11}});
    ValueIterationSettings stored, fly;
    fly.stencil_budget = 0;
    const auto a = value_iteration(chain, g, stored);
    const auto b = value_iteration(chain, g, fly);
    EXPECT_TRUE(a.precomputed);
    EXPECT_FALSE(b.precomputed);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_LE((a.value.values - b.value.values).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(a.policy.index, b.policy.index);
}

TEST(ValueIteration, MertonDeskInstance) {
    const ProblemSpec s = merton_desk();
    const LagChain chain(s, 1);
    const auto r = value_iteration(chain, merton_grid(chain));
    const auto o = merton_classical_oracle(0.01, 0.07, 0.3, 0.5, 0.1);
    Eigen::VectorXd z(4);
    z << 1.0, 1.0, 1.0, 1.0;
    EXPECT_NEAR(r.value(z) / (-o.value(1.0, 0.5)), 1.0, 0.03);
    const PolicyField pol = extract_feedback(chain, r.value);
    const double step = 1.0 / (s.controls.size() - 1);
    EXPECT_LE(std::abs(s.controls[pol.at(z)][0] - o.u_star), step + 1e-12);
}

TEST(Feedback, BangBangAndSingleton) {
    AffineTestParams p;
    p.b_u = 1.0;
    p.control_count = 5;
    const ProblemSpec s = build_affine_test(p, SegmentGrid(1.0, 10));
    const LagChain chain(s, 1);
    const TensorGrid g = chain_grid(chain, {{"y", -1.0, 1.0, 9}, {"y-1", -1.0, 1.0, 3}});
    Eigen::VectorXd up(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) up[static_cast<Eigen::Index>(i)] = g.point(i)[0];
    // V increasing in y0: pushing y down is best, the lowest control.
    for (auto i : extract_feedback(chain, {g, up}).index) EXPECT_EQ(i, 0u);
    for (auto i : extract_feedback(chain, {g, -up}).index) EXPECT_EQ(i, 4u);
    // Flat V: every control ties, the lowest index wins.
    for (auto i : extract_feedback(chain, {g, Eigen::VectorXd::Zero(up.size())}).index) EXPECT_EQ(i, 0u);
    p.control_count = 1;
    const LagChain single(build_affine_test(p, SegmentGrid(1.0, 10)), 1);
    for (auto i : extract_feedback(single, {g, -up}).index) EXPECT_EQ(i, 0u);
}

TEST(Feedback, ArgmaxIsScaleInvariant) {
    const ProblemSpec s = advertising(0.2);
    const LagChain chain(s, 2);
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}));
    const PolicyField base = extract_feedback(chain, r.value);
    for (double k : {0.25, 3.0}) {
        AdvertisingParams p;
        p.sigma0 = 0.2;
        p.c0 *= k;
        p.h_coef *= k;
        p.g_slope *= k;
        const LagChain scaled(build_advertising(p, SegmentGrid(1.0, 20)), 2);
        EXPECT_EQ(extract_feedback(scaled, r.value).index, base.index);
        // V and l scaled together: the whole integrand scales.
        AdvertisingParams q;
        q.sigma0 = 0.2;
        q.h_coef *= k;
        q.g_slope *= k;
        const LagChain cost_scaled(build_advertising(q, SegmentGrid(1.0, 20)), 2);
        const ValueField kv{r.value.grid, k * r.value.values};
        EXPECT_EQ(extract_feedback(cost_scaled, kv).index, base.index);
    }
}

TEST(PolicyValue, ConstantPolicyMatchesOpenLoop) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    const TensorGrid g = chain_grid(chain, {{"y", -1.0, 3.0, 9}});
    const PolicyField pol{g, std::vector<std::size_t>(g.size(), 4)};
    MonteCarloSettings mc;
    mc.T = 2.0;
    mc.dt = 0.05;
    mc.paths = 200;
    mc.seed = 17;
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(1, 0.5));
    const auto closed = policy_mc_value(chain, pol, x, mc);
    const auto open = mc_cost(s, x, ControlProcess::constant(s.controls[4]), mc);
    EXPECT_EQ(closed.stats.mean, open.mean);
    EXPECT_EQ(closed.stats.std_error, open.std_error);
    EXPECT_EQ(closed.clamp_rate, 0.0);
}

TEST(PolicyValue, DeterministicHasZeroStderr) {
    const ProblemSpec s = advertising(0.0);
    const LagChain chain(s, 2);
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}));
    MonteCarloSettings mc;
    mc.T = 5.0;
    mc.dt = 0.05;
    mc.paths = 10;
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(1, 0.5));
    const auto v = policy_mc_value(chain, r.policy, x, mc);
    EXPECT_EQ(v.stats.std_error, 0.0);
    EXPECT_TRUE(std::isfinite(v.stats.mean));
}

TEST(HjbResidual, ConstantCostFixedPointIsExact) {
    const ProblemSpec s = unit_cost(advertising(0.3, 1));
    const LagChain chain(s, 2);
    const TensorGrid g = chain_grid(chain, {{"y", -1.0, 3.0, 9}, {"y-2", -1.0, 3.0, 9}});
    const ValueField V{g, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), 1.0 / s.rho)};
    Eigen::VectorXd z(3);
    z << 0.5, 1.0, -0.25;
    EXPECT_NEAR(hjb_residual(chain, V, z), 0.0, 1e-12);
    const ValueField shifted{g, V.values.array() + 2.5};
    EXPECT_NEAR(hjb_residual(chain, shifted, z) - hjb_residual(chain, V, z), s.rho * 2.5, 1e-12);
    z[0] = 3.0;
    EXPECT_THROW((void)hjb_residual(chain, V, z), DomainError);
}

TEST(HjbResidual, ShiftByConstantOnSolvedField) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}));
    const ValueField shifted{r.value.grid, r.value.values.array() - 0.75};
    Eigen::VectorXd z(3);
    z << 0.3, 0.9, 0.0;
    z[2] = r.value.grid.axis(2).min;
    EXPECT_NEAR(hjb_residual(chain, shifted, z) - hjb_residual(chain, r.value, z), -0.75 * s.rho, 1e-10);
}

TEST(HjbResidual, ShrinksUnderRefinement) {
    // No kernel: the step D = d and the grid spacing are refined together.
    AffineTestParams p;
    p.b_x = -0.5;
    p.b_u = 1.0;
    p.s_const = 0.3;
    p.c_x = 1.0;
    p.c_u = 0.5;
    p.a1 = {"zero", 0.0};
    p.control_count = 11;
    std::vector<double> med;
    for (int level = 0; level < 3; ++level) {
        const double d = 0.2 / (1 << level);
        const LagChain chain(build_affine_test(p, SegmentGrid(d, 2)), 1);
        const auto r = value_iteration(chain, chain_grid(chain, {{"y", -3.0, 3.0, 20 * (1 << level) + 1}}));
        std::vector<double> res;
        for (double y = -1.0; y <= 1.0 + 1e-12; y += 0.1) {
            Eigen::VectorXd z(2);
            z << y, r.value.grid.axis(1).min;
            res.push_back(std::abs(hjb_residual(chain, r.value, z)));
        }
        med.push_back(median(res));
    }
    EXPECT_LT(med[1], med[0]);
    EXPECT_LT(med[2], med[1]);
}

TEST(DppGap, ZeroHorizonAndSingleton) {
    const ProblemSpec s = advertising(0.0, 1);
    const LagChain chain(s, 2);
    ValueIterationSettings vs;
    vs.tol = 1e-9;
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}), vs);
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(1, 0.5));
    const auto zero = dpp_gap(chain, r.value, x, 0.0, 100, 1);
    EXPECT_EQ(zero.gap, 0.0);
    EXPECT_EQ(zero.grid_tolerance, 0.0);
    const auto one = dpp_gap(chain, r.value, x, chain.step(), 100, 1);
    EXPECT_LE(std::abs(one.gap), vs.tol / (1.0 - chain.discount()));
    EXPECT_EQ(one.std_error, 0.0);
    EXPECT_THROW((void)dpp_gap(chain, r.value, x, 0.3 * chain.step(), 100, 1), ValidationError);
}

TEST(DppGap, MertonIsBoundedByMonteCarloError) {
    const ProblemSpec s = merton_desk();
    const LagChain chain(s, 1);
    const auto r = value_iteration(chain, merton_grid(chain));
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(2, 1.0));
    const auto g = dpp_gap(chain, r.value, x, 5.0 * chain.step(), 4000, 21);
    EXPECT_EQ(g.rows.size(), s.controls.size());
    EXPECT_LE(g.gap, 2.0 * g.std_error + 1e-3 * std::abs(g.value));
    EXPECT_GE(g.grid_tolerance, 0.0);
    EXPECT_LE(g.gap, 2.0 * g.std_error + g.grid_tolerance);
}

TEST(BellmanDefect, VanishesAtConvergedNodes) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    ValueIterationSettings vs;
    vs.tol = 1e-10;
    const auto r = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 21}}), vs);
    for (std::size_t node = 0; node < r.value.grid.size(); node += 37)
        EXPECT_LE(bellman_defect(chain, r.value, r.value.grid.point(node)), 1e-8);
}

TEST(GrowthFit, StableUnderRefinement) {
    const ProblemSpec s = advertising(0.3);
    const LagChain chain(s, 2);
    const auto coarse = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 11}}));
    const auto fine = value_iteration(chain, chain_grid(chain, {{"y", -1.0, 3.0, 41}}));
    const double c1 = growth_fit(chain, coarse.value, s.constants.m_cost).constant;
    const double c2 = growth_fit(chain, fine.value, s.constants.m_cost).constant;
    EXPECT_GT(c1, 0.0);
    EXPECT_NEAR(c1 / c2, 1.0, 0.1);
    for (std::size_t i = 0; i < fine.value.grid.size(); ++i) {
        const double r = lifted_norm(chain.lifted(fine.value.grid.point(i)));
        EXPECT_LE(std::abs(fine.value.values[static_cast<Eigen::Index>(i)]), c2 * (1.0 + r) * (1.0 + 1e-12));
    }
}

TEST(RegularityProbe, SyntheticQuadraticIsC11) {
    const std::vector<Axis> box{{"y", -1.0, 1.0, 33}};
    const auto r = regularity_probe(box, [](const Eigen::VectorXd& x) { return 1.5 * x[0] * x[0]; },
                                    RegularityClaim::Asserted);
    EXPECT_NEAR(r.alpha, 1.0, 0.05);
    EXPECT_FALSE(r.kink);
    EXPECT_FALSE(r.inconclusive);
    EXPECT_NEAR(r.lipschitz, 3.0, 0.1);
}

TEST(RegularityProbe, SyntheticKinkIsFlagged) {
    const std::vector<Axis> box{{"y", -1.0, 1.0, 33}};
    const auto r = regularity_probe(box, [](const Eigen::VectorXd& x) { return std::abs(x[0]); },
                                    RegularityClaim::Asserted);
    EXPECT_NEAR(r.lipschitz, 1.0, 1e-12);
    EXPECT_TRUE(r.kink);
    EXPECT_LT(r.alpha, 0.3);
}

TEST(RegularityProbe, TwoDimensionalAndDeterministic) {
    const std::vector<Axis> box{{"a", -1.0, 1.0, 17}, {"b", 0.0, 2.0, 17}};
    const auto smooth = regularity_probe(
        box, [](const Eigen::VectorXd& x) { return x[0] * x[0] + x[0] * x[1] + std::sin(x[1]); },
        RegularityClaim::Empirical);
    EXPECT_GT(smooth.alpha, 0.8);
    EXPECT_FALSE(smooth.kink);
    const auto det = regularity_probe(box, [](const Eigen::VectorXd& x) { return x[0] - 2.0 * x[1]; },
                                      RegularityClaim::LipschitzOnly);
    EXPECT_NEAR(det.lipschitz, 2.0, 1e-12);
    EXPECT_TRUE(std::isnan(det.alpha));
    EXPECT_EQ(regularity_claim(advertising(0.0)), RegularityClaim::LipschitzOnly);
    EXPECT_EQ(regularity_claim(advertising(0.2)), RegularityClaim::Asserted);
    EXPECT_EQ(regularity_claim(merton_desk()), RegularityClaim::Empirical);
}

TEST(BContinuity, OscillatoryPairsVanish) {
    const ProblemSpec s = advertising(0.0, 3, 1.0, 200);
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(1, 0.5));
    const auto pairs = oscillatory_pairs(x, 1.0, {0, 1, 2, 4, 8, 16, 32});
    MonteCarloSettings mc;
    mc.T = 4.0;
    mc.dt = 0.005;
    const auto est = mc_pair_estimator(s, ControlProcess::constant(s.controls[1]), mc);
    const auto rep = b_continuity_probe(pairs, est, 10.0, 3);
    ASSERT_EQ(rep.rows.size(), 7u);
    ASSERT_EQ(rep.envelope.size(), 3u);
    EXPECT_GT(rep.envelope.front().distance, 0.0);
    EXPECT_EQ(rep.rows.front().distance, 0.0);
    EXPECT_EQ(rep.rows.front().difference, 0.0);
    EXPECT_TRUE(rep.monotone);
    EXPECT_TRUE(rep.vanishing);
    // Farther pairs in |.|_{-1} are not closer in value.
    EXPECT_GT(rep.rows.back().difference, 10.0 * rep.rows[1].difference);
    EXPECT_THROW((void)b_continuity_probe(pairs, est, 0.1), DomainError);
}

TEST(BContinuity, EnvelopeStuckAwayFromZeroIsFlagged) {
    const LiftedState x = LiftedState::zero(SegmentGrid(1.0, 64), 1);
    const auto pairs = oscillatory_pairs(x, 1.0, {1, 2, 4, 8, 16, 32});
    const auto jump = [](const LiftedState& a, const LiftedState& b) {
        return PairEstimate{0.5 + 0.1 * minus_one_norm(a - b), 1e-3};
    };
    const auto stuck = b_continuity_probe(pairs, jump, 10.0, 3);
    EXPECT_TRUE(stuck.monotone);
    EXPECT_FALSE(stuck.vanishing);
    EXPECT_NEAR(stuck.intercept, 0.5, 1e-9);
    const auto linear = [](const LiftedState& a, const LiftedState& b) {
        return PairEstimate{0.1 * minus_one_norm(a - b), 1e-3};
    };
    EXPECT_TRUE(b_continuity_probe(pairs, linear, 10.0, 3).vanishing);
}

TEST(BContinuity, HeadPairsRespectHeadLipschitz) {
    const ProblemSpec s = advertising(0.0, 3, 1.0, 20);
    const LiftedState x = constant_state(s.grid, Eigen::VectorXd::Constant(1, 0.5));
    MonteCarloSettings mc;
    mc.T = 6.0;
    mc.dt = 0.01;
    const ControlProcess ctrl = ControlProcess::constant(s.controls[1]);
    const auto head_value = [&](const Eigen::VectorXd& y0) {
        LiftedState y = x;
        y.head() = y0;
        MonteCarloSettings one = mc;
        one.paths = 2;
        return mc_cost(s, y, ctrl, one).mean;
    };
    const auto reg = regularity_probe({{"y", 0.0, 1.0, 9}}, head_value, RegularityClaim::LipschitzOnly);
    std::vector<StatePair> pairs;
    for (double dy : {0.05, 0.1, 0.2}) {
        LiftedState y = x;
        y.head()[0] += dy;
        pairs.push_back({x, y});
    }
    const auto rep = b_continuity_probe(pairs, mc_pair_estimator(s, ctrl, mc), 10.0, 1);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double dy = (pairs[i].y.head() - pairs[i].x.head()).norm();
        const auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [&](const BContinuityRow& row) {
            return std::abs(row.difference - std::abs(head_value(pairs[i].x.head()) - head_value(pairs[i].y.head()))) <
                   1e-12;
        });
        ASSERT_NE(it, rep.rows.end());
        EXPECT_LE(it->difference, reg.lipschitz * dy * 1.05);
    }
}
