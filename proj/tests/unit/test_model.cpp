#include <gtest/gtest.h>

#include "bisac/errors.hpp"
#include "bisac/model.hpp"

#include <cmath>
#include <random>

using namespace bisac;

TEST(TransitionMatrix, HasSlotLengthInPositionVelocityCoupling) {
    const TransitionMatrix g = build_transition_matrix(0.5);
    Eigen::Matrix4d expected = Eigen::Matrix4d::Identity();
    expected(0, 2) = 0.5;
    expected(1, 3) = 0.5;
    EXPECT_EQ(g.matrix(), expected);
}

TEST(TransitionMatrix, TinyStepApproachesIdentity) {
    const TransitionMatrix g = build_transition_matrix(1e-12);
    EXPECT_LT((g.matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-11);
}

TEST(TransitionMatrix, AppliesConstantVelocity) {
    const TargetState s = build_transition_matrix(0.5).apply({100, 100, 10, 0});
    EXPECT_DOUBLE_EQ(s.x, 105.0);
    EXPECT_DOUBLE_EQ(s.y, 100.0);
    EXPECT_DOUBLE_EQ(s.vx, 10.0);
    EXPECT_DOUBLE_EQ(s.vy, 0.0);
}

TEST(TransitionMatrix, RejectsNonpositiveStep) {
    for (double dt : {0.0, -0.5}) {
        try {
            build_transition_matrix(dt);
            FAIL() << "dt=" << dt;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
        }
    }
}

TEST(TransitionMatrix, ComposesAsSemigroup) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 100; ++i) {
        const TargetState s{u(rng), u(rng), u(rng), u(rng)};
        const double a = 0.1 + std::abs(u(rng)) / 10;
        const double b = 0.1 + std::abs(u(rng)) / 10;
        const TargetState two = TransitionMatrix(b).apply(TransitionMatrix(a).apply(s));
        const TargetState one = TransitionMatrix(a + b).apply(s);
        EXPECT_NEAR((two.vec() - one.vec()).norm(), 0.0, 1e-12 * (1 + s.vec().norm()));
    }
}

TEST(Propagate, NoiselessDiagonalMotion) {
    Rng rng(1);
    const TargetState s = propagate_target({100, 100, 7.071, 7.071}, 0.5, {}, rng);
    EXPECT_NEAR(s.x, 103.536, 1e-3);
    EXPECT_NEAR(s.y, 103.536, 1e-3);
    EXPECT_DOUBLE_EQ(s.vx, 7.071);
    EXPECT_DOUBLE_EQ(s.vy, 7.071);
}

TEST(Propagate, NoiselessMatchesTransitionExactly) {
    Rng rng(9);
    const TargetState s{12.5, -3.25, 1.5, 2.0};
    EXPECT_EQ(propagate_target(s, 0.5, {}, rng).vec(), TransitionMatrix(0.5).apply(s).vec());
}

TEST(Propagate, StationaryTargetStaysPut) {
    Rng rng(1);
    const TargetState s{4, 5, 0, 0};
    EXPECT_EQ(propagate_target(s, 0.5, {}, rng).vec(), s.vec());
}

TEST(Propagate, DeterministicUnderSeed) {
    const MotionNoise noise{1, 1, 0.5, 0.5};
    Rng a(42);
    Rng b(42);
    const TargetState s{100, 100, 10, 0};
    EXPECT_EQ(propagate_target(s, 0.5, noise, a).vec(), propagate_target(s, 0.5, noise, b).vec());
}

TEST(Propagate, NoiseHasConfiguredVariance) {
    const MotionNoise noise{1.0, 4.0, 0.5, 0.25};
    Rng rng(5);
    const TargetState s{0, 0, 0, 0};
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    Eigen::Vector4d sum2 = Eigen::Vector4d::Zero();
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector4d v = propagate_target(s, 0.5, noise, rng).vec();
        sum += v;
        sum2 += v.cwiseProduct(v);
    }
    const Eigen::Vector4d var = sum2 / n - (sum / n).cwiseProduct(sum / n);
    EXPECT_NEAR(var(0), 1.0, 0.03);
    EXPECT_NEAR(var(1), 4.0, 0.12);
    EXPECT_NEAR(var(2), 0.5, 0.015);
    EXPECT_NEAR(var(3), 0.25, 0.008);
}

TEST(Geometry, SlantDistanceFromInitialPlacement) {
    const UavPose p{{140, 100}, 50};
    const TargetState t{100, 100, 0, 0};
    EXPECT_NEAR(slant_distance(p, t), std::sqrt(40.0 * 40.0 + 50.0 * 50.0), 1e-12);
    EXPECT_NEAR(slant_distance(p, t), 64.031, 1e-3);
}

TEST(Geometry, TargetBelowGivesHeight) {
    EXPECT_DOUBLE_EQ(slant_distance({{7, 8}, 50}, {7, 8, 0, 0}), 50.0);
}

TEST(Geometry, SlantDistanceSymmetricInOffsets) {
    const TargetState t{0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(slant_distance({{30, 40}, 50}, t), slant_distance({{40, 30}, 50}, t));
}

TEST(Geometry, SlantDistanceAtLeastHeight) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-500, 500);
    for (int i = 0; i < 1000; ++i) {
        const UavPose p{{u(rng), u(rng)}, 1 + std::abs(u(rng))};
        EXPECT_GE(slant_distance(p, {u(rng), u(rng), 0, 0}), p.height);
    }
}

TEST(Geometry, AngleFromVertical) {
    const TargetState t{0, 0, 0, 0};
    EXPECT_NEAR(elevation_angle_deg({{50, 0}, 50}, t), 45.0, 1e-12);
    EXPECT_DOUBLE_EQ(elevation_angle_deg({{0, 0}, 50}, t), 0.0);
    EXPECT_NEAR(elevation_angle_deg({{140, 100}, 50}, {100, 100, 0, 0}), 38.66, 5e-3);
}

TEST(Geometry, AngleIncreasesWithOffset) {
    const TargetState t{0, 0, 0, 0};
    double prev = -1.0;
    for (double r = 0.0; r <= 1000.0; r += 0.5) {
        const double a = elevation_angle_deg({{r, 0}, 50}, t);
        EXPECT_GT(a, prev);
        EXPECT_LT(a, 90.0);
        prev = a;
    }
}

TEST(Constraints, SpeedBoundary) {
    const UavPose a{{0, 0}, 50};
    EXPECT_TRUE(check_speed(a, a.with_position({10, 0}), 20, 0.5));
    EXPECT_TRUE(check_speed(a, a, 20, 0.5));
    EXPECT_FALSE(check_speed(a, a.with_position({10.001, 0}), 20, 0.5));
}

TEST(Constraints, Separation) {
    EXPECT_TRUE(check_separation({{140, 100}, 50}, {{120, 200}, 50}, 40));
    EXPECT_FALSE(check_separation({{1, 1}, 50}, {{1, 1}, 50}, 40));
    EXPECT_TRUE(check_separation({{1, 1}, 50}, {{1, 1}, 50}, 0));
}
