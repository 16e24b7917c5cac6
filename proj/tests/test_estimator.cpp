#include <pstab/estimator.hpp>
#include <pstab/pid.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

using namespace pstab;

TEST(Median, DistinctTriple)
{
    const auto m = median_setpoint({12, 10, 11});
    EXPECT_EQ(m.z_target, 11);
    EXPECT_EQ(m.stationary_leg, 2u);
}

TEST(Median, TiesGoToLowestIndex)
{
    EXPECT_EQ(median_setpoint({5, 5, 5}).stationary_leg, 0u);
    EXPECT_EQ(median_setpoint({5, 3, 5}).stationary_leg, 0u);
    EXPECT_EQ(median_setpoint({3, 5, 5}).stationary_leg, 1u);
    EXPECT_EQ(median_setpoint({7, 5, 5}).stationary_leg, 1u);
}

TEST(Median, RejectsNonFinite)
{
    EXPECT_THROW(median_setpoint({1, std::nan(""), 2}), ValidationError);
    EXPECT_THROW(median_setpoint({1, 2, std::numeric_limits<double>::infinity()}), ValidationError);
}

TEST(Median, MatchesSortOracle)
{
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> coarse(0, 4);  // plenty of ties
    std::normal_distribution<double> fine(88.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        std::array<double, 3> z{};
        for (auto& v : z) v = (i % 2) ? fine(rng) : coarse(rng);
        auto sorted = z;
        std::sort(sorted.begin(), sorted.end());
        const auto m = median_setpoint(z);
        ASSERT_EQ(m.z_target, sorted[1]);
        ASSERT_EQ(z[m.stationary_leg], sorted[1]);
        for (std::size_t k = 0; k < m.stationary_leg; ++k) ASSERT_NE(z[k], sorted[1]);
    }
}

TEST(Median, PermutationEquivariant)
{
    std::mt19937_64 rng(29);
    std::normal_distribution<double> d(0.0, 10.0);
    std::array<std::size_t, 3> perm{0, 1, 2};
    for (int i = 0; i < 300; ++i) {
        const std::array<double, 3> z{d(rng), d(rng), d(rng)};
        const auto m = median_setpoint(z);
        std::shuffle(perm.begin(), perm.end(), rng);
        const std::array<double, 3> p{z[perm[0]], z[perm[1]], z[perm[2]]};
        const auto mp = median_setpoint(p);
        ASSERT_EQ(mp.z_target, m.z_target);
        ASSERT_EQ(perm[mp.stationary_leg], m.stationary_leg);
    }
}

TEST(Errors, SignedOffsets)
{
    EXPECT_EQ(error_signals(10, {8, 10, 12}), (std::array<double, 3>{2, 0, -2}));
    EXPECT_EQ(error_signals(10, {10, 10, 10}), (std::array<double, 3>{0, 0, 0}));
}

TEST(Errors, MagnitudeIsAbsoluteDifference)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 500; ++i) {
        const double zo = u(rng);
        const std::array<double, 3> z{u(rng), u(rng), u(rng)};
        const auto e = error_signals(zo, z);
        for (std::size_t j = 0; j < 3; ++j) ASSERT_EQ(std::abs(e[j]), std::abs(zo - z[j]));
    }
}

TEST(Errors, TranslationInvariant)
{
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 500; ++i) {
        const std::array<double, 3> z{u(rng), u(rng), u(rng)};
        const double c = 0.25 * std::round(4 * u(rng));  // exact in binary
        const std::array<double, 3> zc{z[0] + c, z[1] + c, z[2] + c};
        const auto a = error_signals(median_setpoint(z).z_target, z);
        const auto b = error_signals(median_setpoint(zc).z_target, zc);
        for (std::size_t j = 0; j < 3; ++j) ASSERT_NEAR(a[j], b[j], 1e-12);
    }
}

TEST(Decision, StationaryLegHasZeroErrorAndZeroOutput)
{
    std::mt19937_64 rng(41);
    const PlatformGeometry g = PlatformGeometry::defaults();
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 1000; ++i) {
        const RobotState s = estimate_state({u(rng), u(rng), u(rng)}, g);
        const SetPointDecision d = decide_setpoint(s);
        ASSERT_EQ(d.errors[d.stationary_leg], 0.0);
        ASSERT_EQ(d.z_target, s.joints[d.stationary_leg].z);
        int zeros = 0;
        for (double e : d.errors) zeros += e == 0.0;
        ASSERT_GE(zeros, 1);
        PidController pid(PidGains{2.0, 5.0, 0.1});
        ASSERT_EQ(pid.step(d.errors[d.stationary_leg]), 0.0);
    }
}

TEST(Estimate, DelegatesToForwardKinematics)
{
    const PlatformGeometry g = PlatformGeometry::defaults();
    const EulerAngles a{0.05, -0.12, 0.2};
    const RobotState s = estimate_state(a, g, 1.25);
    const RobotState k = ball_joint_positions(a, g);
    EXPECT_EQ(s.joints, k.joints);
    EXPECT_EQ(s.timestamp, 1.25);

    const RobotState home = estimate_state({0, 0, 0}, g);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(home.joints[j].z, g.base_height);
}

TEST(Estimate, PitchTiltPicksTheJointOnTheAxis)
{
    // joints at bearings 90/210/330: leg 0 sits on the pitch axis
    const PlatformGeometry g = PlatformGeometry::defaults();
    const RobotState s = estimate_state({0, 0.1, 0}, g);
    const auto z = s.heights();
    EXPECT_NE(z[1], z[2]);
    const double x1 = g.joint_top[1].x, x2 = g.joint_top[2].x;
    EXPECT_NEAR(z[1], -std::sin(0.1) * x1 + g.base_height, 1e-12);
    EXPECT_NEAR(z[2], -std::sin(0.1) * x2 + g.base_height, 1e-12);
    const auto m = median_setpoint(z);
    EXPECT_EQ(m.stationary_leg, 0u);
    EXPECT_NEAR(m.z_target, g.base_height, 1e-12);
}
