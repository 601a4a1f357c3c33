// SPDX-License-Identifier: MIT
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/numerics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace delayctl;

namespace {

LiftedState constant_state(const SegmentGrid& g, double head, double tail) {
    return LiftedState(Eigen::VectorXd::Constant(1, head), Segment::constant(g, Eigen::VectorXd::Constant(1, tail)));
}

Kernel ramp_kernel(const SegmentGrid& g) {
    KernelPreset p;
    p.name = "affine_ramp";
    return Kernel::from_preset(p, g);
}

}  // namespace

TEST(SegmentGrid, NodesAndWeights) {
    const SegmentGrid g(1.5, 7);
    EXPECT_EQ(g.size(), 8);
    EXPECT_DOUBLE_EQ(g.node(0), -1.5);
    EXPECT_EQ(g.node(7), 0.0);
    EXPECT_NEAR(g.weights().sum(), 1.5, 1e-14);
    EXPECT_DOUBLE_EQ(g.weight(0), 0.5 * g.step());
    EXPECT_DOUBLE_EQ(g.weight(3), g.step());
    for (int j = 1; j < g.size(); ++j) EXPECT_LT(g.node(j - 1), g.node(j));
    EXPECT_THROW(SegmentGrid(0.0, 4), ValidationError);
    EXPECT_THROW(SegmentGrid(1.0, 0), ValidationError);
}

TEST(LiftedInner, HeadOnlyState) {
    const SegmentGrid g(1.0, 10);
    const auto x = constant_state(g, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(lifted_inner(x, x), 1.0);
}

TEST(LiftedInner, ConstantTail) {
    const SegmentGrid g(1.0, 10);
    const auto x = constant_state(g, 0.0, 1.0);
    EXPECT_NEAR(lifted_inner(x, x), 1.0, 1e-14);
}

TEST(LiftedInner, BilinearOnConstants) {
    const SegmentGrid g(1.0, 10);
    EXPECT_NEAR(lifted_inner(constant_state(g, 1.0, 1.0), constant_state(g, 2.0, -1.0)), 1.0, 1e-14);
}

TEST(LiftedInner, GridMismatchThrows) {
    EXPECT_THROW((void)lifted_inner(constant_state(SegmentGrid(1.0, 10), 1, 1), constant_state(SegmentGrid(1.0, 11), 1, 1)),
                 DimensionError);
    EXPECT_THROW((void)lifted_inner(constant_state(SegmentGrid(1.0, 10), 1, 1), constant_state(SegmentGrid(2.0, 10), 1, 1)),
                 DimensionError);
}

TEST(LiftedInner, ExactForAffineProducts) {
    // Product of a constant and an affine tail is affine, so trapezoid is exact.
    const SegmentGrid g(2.0, 5);
    const LiftedState x(Eigen::VectorXd::Zero(1), Segment::from_function(g, 1, [](double xi) {
                            return Eigen::VectorXd::Constant(1, 3.0 * xi + 1.0);
                        }));
    const auto y = constant_state(g, 0.0, 2.0);
    // 2 * int_{-2}^0 (3 xi + 1) dxi = 2 * (-6 + 2)
    EXPECT_NEAR(lifted_inner(x, y), -8.0, 1e-13);
}

TEST(LiftedNorm, Examples) {
    const SegmentGrid g(1.0, 10);
    EXPECT_DOUBLE_EQ(lifted_norm(constant_state(g, 1.0, 0.0)), 1.0);
    EXPECT_NEAR(lifted_norm(constant_state(g, 0.0, 1.0)), 1.0, 1e-14);
    EXPECT_NEAR(lifted_norm(constant_state(g, 3.0, 4.0)), 5.0, 1e-13);
    EXPECT_EQ(lifted_norm(LiftedState::zero(g, 2)), 0.0);
}

TEST(LiftedInner, CauchySchwarzAndSymmetry) {
    std::mt19937_64 rng(11);
    const SegmentGrid g(1.3, 40);
    for (int k = 0; k < 200; ++k) {
        const auto x = fixtures::random_smooth_state(g, 2, rng, false);
        const auto y = fixtures::random_smooth_state(g, 2, rng, false);
        EXPECT_LE(std::abs(lifted_inner(x, y)), lifted_norm(x) * lifted_norm(y) * (1 + 1e-12));
        EXPECT_NEAR(lifted_inner(x, y), lifted_inner(y, x), 1e-12);
    }
}

TEST(KernelConvolve, RampAgainstOne) {
    const SegmentGrid g(1.0, 10);
    const auto a = ramp_kernel(g);
    const auto s = Segment::constant(g, Eigen::VectorXd::Ones(1));
    EXPECT_NEAR(kernel_convolve(a, s)[0], 0.5, 1e-14);
}

TEST(KernelConvolve, ZeroKernel) {
    const SegmentGrid g(1.0, 10);
    std::mt19937_64 rng(3);
    const auto x = fixtures::random_smooth_state(g, 1, rng, false);
    EXPECT_EQ(kernel_convolve(Kernel::zero(g, 1, 1), x.tail())[0], 0.0);
}

TEST(KernelConvolve, RampAgainstRampConvergesSecondOrder) {
    double prev = 0.0;
    for (int m : {10, 20, 40, 80}) {
        const SegmentGrid g(1.0, m);
        const auto s = Segment::from_function(g, 1, [](double xi) { return Eigen::VectorXd::Constant(1, xi + 1.0); });
        const double err = std::abs(kernel_convolve(ramp_kernel(g), s)[0] - 1.0 / 3.0);
        if (m > 10) {
            EXPECT_NEAR(prev / err, 4.0, 0.05) << "m=" << m;
        }
        prev = err;
    }
}

TEST(KernelConvolve, LinearInSegment) {
    const SegmentGrid g(1.0, 30);
    KernelPreset p;
    p.name = "sine_bump";
    p.selector = Eigen::MatrixXd::Random(2, 3);
    const auto a = Kernel::from_preset(p, g);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const auto x = fixtures::random_smooth_state(g, 3, rng, false);
        const auto y = fixtures::random_smooth_state(g, 3, rng, false);
        const double alpha = 0.37 * k - 4.0;
        const Segment combo(g, x.tail().values() + alpha * y.tail().values());
        const Eigen::VectorXd lhs = kernel_convolve(a, combo);
        const Eigen::VectorXd rhs = kernel_convolve(a, x.tail()) + alpha * kernel_convolve(a, y.tail());
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm()));
    }
}

TEST(KernelConvolve, GridMismatchThrows) {
    EXPECT_THROW((void)kernel_convolve(ramp_kernel(SegmentGrid(1.0, 10)), Segment::constant(SegmentGrid(1.0, 12), Eigen::VectorXd::Ones(1))),
                 DimensionError);
}

TEST(ValidateKernel, AcceptsRampRejectsConstant) {
    const SegmentGrid g(1.0, 20);
    EXPECT_TRUE(validate_kernel(ramp_kernel(g)).ok);
    EXPECT_TRUE(validate_kernel(Kernel::zero(g, 1, 1)).ok);

    KernelPreset one;
    one.name = "constant";
    const auto report = validate_kernel(Kernel::from_preset(one, g));
    ASSERT_FALSE(report.ok);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_NE(report.violations.front().find("endpoint"), std::string::npos);
}

TEST(ValidateKernel, AcceptsEveryPreset) {
    const SegmentGrid g(0.7, 33);
    for (const char* name : {"zero", "affine_ramp", "sine_bump", "exp_ramp"}) {
        KernelPreset p;
        p.name = name;
        p.scale = -2.5;
        p.rate = 3.0;
        EXPECT_TRUE(validate_kernel(Kernel::from_preset(p, g)).ok) << name;
    }
}

TEST(ValidateKernel, ReportsNonFiniteTables) {
    const SegmentGrid g(1.0, 4);
    const auto k = Kernel::from_table(g, {0.0, 1.0, std::numeric_limits<double>::infinity(), 1.0, 0.0},
                                      Eigen::MatrixXd::Ones(1, 1));
    const auto report = validate_kernel(k);
    EXPECT_FALSE(report.ok);
}

TEST(ResampleSegment, ConstantsAndAffineAreExact) {
    const SegmentGrid g(1.0, 7), fine(1.0, 14), other(1.0, 23);
    const auto c = Segment::constant(g, Eigen::VectorXd::Constant(2, -3.5));
    const auto rc = resample_segment(c, other);
    EXPECT_LE((rc.values().array() + 3.5).abs().maxCoeff(), 1e-15);

    const auto aff = Segment::from_function(g, 1, [](double xi) { return Eigen::VectorXd::Constant(1, 2.0 * xi - 1.0); });
    const auto ra = resample_segment(aff, fine);
    for (int j = 0; j < fine.size(); ++j) EXPECT_NEAR(ra.values()(0, j), 2.0 * fine.node(j) - 1.0, 1e-14);

    const auto same = resample_segment(aff, g);
    EXPECT_EQ((same.values() - aff.values()).norm(), 0.0);
}

TEST(ResampleSegment, QuadraticInterpolationBound) {
    const SegmentGrid coarse(1.0, 10), fine(1.0, 100);
    const auto sq = Segment::from_function(coarse, 1, [](double xi) { return Eigen::VectorXd::Constant(1, xi * xi); });
    const auto r = resample_segment(sq, fine);
    double err = 0.0;
    for (int j = 0; j < fine.size(); ++j) err = std::max(err, std::abs(r.values()(0, j) - fine.node(j) * fine.node(j)));
    // Linear interpolation error <= h^2 max|f''| / 8 = h^2 / 4, attained at midpoints.
    EXPECT_LE(err, coarse.step() * coarse.step() / 4.0 + 1e-15);
    EXPECT_NEAR(err, coarse.step() * coarse.step() / 4.0, 1e-12);
}

TEST(ResampleSegment, DelayMismatchThrows) {
    EXPECT_THROW((void)resample_segment(Segment::constant(SegmentGrid(1.0, 4), Eigen::VectorXd::Ones(1)), SegmentGrid(2.0, 4)),
                 DimensionError);
}

TEST(LiftedState, DomainPredicate) {
    const SegmentGrid g(1.0, 4);
    EXPECT_TRUE(constant_state(g, 2.0, 2.0).in_domain());
    EXPECT_FALSE(constant_state(g, 2.0, 1.0).in_domain());
    EXPECT_THROW(LiftedState(Eigen::VectorXd::Zero(2), Segment::constant(g, Eigen::VectorXd::Zero(1))), DimensionError);
}

TEST(Numerics, GaussHermiteMoments) {
    const auto gh = gauss_hermite(5);
    auto moment = [&](int k) {
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += gh.weights[i] * std::pow(gh.nodes[i], k);
        return s;
    };
    const double expected[] = {1, 0, 1, 0, 3, 0, 15, 0, 105, 0};
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(moment(k), expected[k], 1e-10 * (1 + expected[k])) << k;
}

TEST(Numerics, CompensatedSumOrderIndependent) {
    std::vector<double> xs;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 10000; ++i) xs.push_back(U(rng) * std::pow(10.0, i % 12));
    const double forward = compensated_sum(xs);
    std::reverse(xs.begin(), xs.end());
    EXPECT_NEAR(compensated_sum(xs), forward, 1e-12 * std::abs(forward));
}

TEST(Numerics, ParallelForVisitsEachIndexOnce) {
    setenv("DELAYCTL_THREADS", "4", 1);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    unsetenv("DELAYCTL_THREADS");
    for (int h : hits) EXPECT_EQ(h, 1);
}
