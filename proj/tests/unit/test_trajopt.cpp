#include <gtest/gtest.h>

#include "bisac/barrier_solver.hpp"
#include "bisac/config.hpp"
#include "bisac/ekf.hpp"
#include "bisac/errors.hpp"
#include "bisac/sim.hpp"
#include "bisac/trajopt.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace bisac;

namespace {

double wc_snr_at(double r, double height, const ErrorBall& ball, const ChannelParams& p) {
    const UavPose q{{r, 0}, height};
    const TargetState t{0, 0, 0, 0};
    return worst_case_snr(predicted_channel(q, t, p), ball, p);
}

// Epsilon of the second slot at the default scenario.
ErrorBall default_ball(const ScenarioConfig& c) {
    const EkfBelief b{c.initial_target(), c.initial_covariance.asDiagonal()};
    return error_radius(time_update(b, TransitionMatrix(c.dt), c.motion.covariance()).m, c.psi);
}

Eigen::Vector2d sample_disk(std::mt19937_64& rng, const Disk& d) {
    std::uniform_real_distribution<double> u(0, 1);
    const double r = d.radius * std::sqrt(u(rng));
    const double a = 2 * std::numbers::pi * u(rng);
    return d.center + r * Eigen::Vector2d(std::cos(a), std::sin(a));
}

}  // namespace

TEST(Barrier, LinearObjectiveOverBall) {
    ConvexProgram p;
    p.objective = Eigen::Vector2d(3, 4);
    p.balls.push_back({Eigen::Matrix2d::Identity(), {1, 2}, 10});
    const BarrierResult r = solve_barrier(p, Eigen::Vector2d(1, 2));
    EXPECT_NEAR((r.z - Eigen::Vector2d(1 - 6, 2 - 8)).norm(), 0.0, 1e-6);
    EXPECT_LE(r.kkt_residual, 1e-6);
    EXPECT_LE(p.max_violation(r.z), 1e-9);
}

TEST(Barrier, HalfspaceCutsBall) {
    ConvexProgram p;
    p.objective = Eigen::Vector2d(1, 0);
    p.balls.push_back({Eigen::Matrix2d::Identity(), {0, 0}, 1});
    p.halfspaces.push_back({Eigen::Vector2d(1, 0), -0.5});  // x >= -0.5
    const BarrierResult r = solve_barrier(p, Eigen::Vector2d(0, 0));
    EXPECT_NEAR(r.z(0), -0.5, 1e-6);
    EXPECT_LE(kkt_residual(p, r.z), 1e-6);
}

TEST(Barrier, EmptySetRaises) {
    ConvexProgram p;
    p.objective = Eigen::Vector2d(1, 0);
    p.balls.push_back({Eigen::Matrix2d::Identity(), {0, 0}, 1});
    p.halfspaces.push_back({Eigen::Vector2d(1, 0), 2.0});
    try {
        solve_barrier(p, Eigen::Vector2d(0, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SubproblemInfeasible);
    }
}

TEST(Barrier, KktResidualFlagsSuboptimalPoint) {
    ConvexProgram p;
    p.objective = Eigen::Vector2d(1, 0);
    p.balls.push_back({Eigen::Matrix2d::Identity(), {0, 0}, 1});
    EXPECT_LE(kkt_residual(p, Eigen::Vector2d(-1, 0)), 1e-12);
    EXPECT_GT(kkt_residual(p, Eigen::Vector2d(0, 0)), 0.1);
    EXPECT_GT(kkt_residual(p, Eigen::Vector2d(0, -1)), 0.1);
}

TEST(LinearizeCrb, AnchoredAtExpansionPoint) {
    const SensingParams p;
    const UavPose a{{140, 100}, 50};
    const UavPose b{{120, 200}, 50};
    const TargetState t{103.5, 103.5, 7, 7};
    const Surrogate s = linearize_crb(a, b, t, p);
    EXPECT_EQ(s.evaluate(s.expansion_point), s.base_value);
    EXPECT_EQ(s.base_value, predicted_crb(a, b, t, p).crb);
    EXPECT_EQ(s.gradient, crb_gradient(a, b, t, p));
}

TEST(LinearizeCrb, SecondOrderError) {
    const SensingParams p;
    const UavPose a{{140, 100}, 50};
    const UavPose b{{120, 200}, 50};
    const TargetState t{103.5, 103.5, 7, 7};
    const Surrogate s = linearize_crb(a, b, t, p);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 20; ++i) {
        Eigen::Vector4d dir;
        for (int k = 0; k < 4; ++k) dir(k) = g(rng);
        dir.normalize();
        auto err = [&](double h) {
            const JointPosition z = s.expansion_point + h * dir;
            return std::abs(s.evaluate(z) - predicted_crb(a.with_position(z.head<2>()),
                                                          b.with_position(z.tail<2>()), t, p).crb);
        };
        const double ratio = err(0.5) / err(0.25);
        EXPECT_NEAR(ratio, 4.0, 0.5) << i;
    }
}

TEST(LinearizeCollision, InnerApproximation) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-150, 150);
    int checked = 0;
    for (int inst = 0; inst < 10; ++inst) {
        const Eigen::Vector2d q1k(u(rng), u(rng));
        const Eigen::Vector2d q2k(u(rng), u(rng));
        const Halfspace h = linearize_collision(q1k, q2k, 40);
        for (int i = 0; i < 10000; ++i) {
            const JointPosition z(u(rng), u(rng), u(rng), u(rng));
            if (!h.contains(z)) continue;
            ++checked;
            EXPECT_GE((z.head<2>() - z.tail<2>()).norm(), 40 - 1e-9);
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(LinearizeCollision, ExpansionPointFeasibleIffSeparated) {
    for (double sep : {10.0, 39.9, 40.0, 40.1, 120.0}) {
        const Eigen::Vector2d a(5, 5);
        const Eigen::Vector2d b = a + sep * Eigen::Vector2d(0.6, 0.8);
        EXPECT_EQ(linearize_collision(a, b, 40).contains(stack(a, b), 1e-9), sep >= 40.0) << sep;
    }
}

TEST(LinearizeCollision, TranslationInvariant) {
    const Eigen::Vector2d a(140, 100);
    const Eigen::Vector2d b(120, 200);
    const Eigen::Vector2d shift(-37.5, 12.25);
    const Halfspace h = linearize_collision(a, b, 40);
    const Halfspace g = linearize_collision(a + shift, b + shift, 40);
    EXPECT_EQ(h.normal, g.normal);
    EXPECT_DOUBLE_EQ(h.offset, g.offset);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-200, 200);
    for (int i = 0; i < 1000; ++i) {
        const JointPosition z(u(rng), u(rng), u(rng), u(rng));
        EXPECT_EQ(h.contains(z), g.contains(z + stack(shift, shift)));
    }
}

TEST(LinearizeCollision, CoincidentPointsRejected) {
    try {
        linearize_collision({1, 1}, {1, 1}, 40);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateLinearization);
    }
}

TEST(SnrRadius, NoRequirementIsUnbounded) {
    const TargetState t{100, 100, 0, 0};
    EXPECT_TRUE(std::isinf(snr_feasible_radius(t, 50, {1e-6}, 0.0, ChannelParams{})));
    const SnrInterval i = snr_feasible_interval(50, {1e-6}, 0.0, ChannelParams{});
    EXPECT_EQ(i.inner, 0.0);
    EXPECT_TRUE(std::isinf(i.outer));
}

TEST(SnrRadius, ShrinksWithThreshold) {
    const TargetState t{100, 100, 0, 0};
    const ChannelParams p;
    double prev = INFINITY;
    for (double db = 10; db <= 30; db += 2.5) {
        const double r = snr_feasible_radius(t, 50, {1e-6}, db_to_linear(db), p);
        EXPECT_LE(r, prev) << db;
        prev = r;
    }
}

TEST(SnrRadius, MatchesDenseGrid) {
    // Small ball, so the overhead position qualifies and the radius is the first exit.
    const ChannelParams p;
    const ErrorBall ball{1e-6};
    const double gamma = db_to_linear(25);
    const double r = snr_feasible_radius({0, 0, 0, 0}, 50, ball, gamma, p);
    double grid = 0.0;
    while (wc_snr_at(grid + 0.01, 50, ball, p) >= gamma) grid += 0.01;
    EXPECT_NEAR(r, grid, 0.01);
    EXPECT_GE(wc_snr_at(r, 50, ball, p), gamma);
}

TEST(SnrRadius, OverheadFailureRaises) {
    const ScenarioConfig c = default_config();
    try {
        snr_feasible_radius(c.initial_target(), 50, default_ball(c), c.gamma_c, c.channel);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SnrInfeasible);
    }
}

TEST(SnrInterval, MatchesDenseGridAtDefaults) {
    const ScenarioConfig c = default_config();
    const ErrorBall ball = default_ball(c);
    const SnrInterval i = snr_feasible_interval(c.h1, ball, c.gamma_c, c.channel);
    double r = 0.0;
    while (wc_snr_at(r, c.h1, ball, c.channel) < c.gamma_c) r += 0.01;
    EXPECT_NEAR(i.inner, r, 0.01);
    while (wc_snr_at(r + 0.01, c.h1, ball, c.channel) >= c.gamma_c) r += 0.01;
    EXPECT_NEAR(i.outer, r, 0.01);
    EXPECT_GT(i.inner, 0.0);
    EXPECT_LT(i.inner, 35.0);  // the start offset of UAV-1 is feasible
    EXPECT_GT(i.outer, 100.0);
}

TEST(SnrInterval, UnreachableThresholdRaises) {
    try {
        snr_feasible_interval(50, {0.0}, 1e30, ChannelParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SnrInfeasible);
    }
}

TEST(Subproblem, UnconstrainedStepAlongNegativeGradient) {
    Surrogate s;
    s.gradient << 1e-9, -2e-9, 0.0, 3e-9;
    s.expansion_point << 140, 100, 120, 200;
    SlotConstraints c;
    c.speed1 = {{140, 100}, 10};
    c.speed2 = {{120, 200}, 10};
    c.collision = linearize_collision({140, 100}, {120, 200}, 40);
    c.snr = {{100, 100}, std::numeric_limits<double>::infinity()};
    const SubproblemSolution sol = solve_subproblem(s, c);
    const Eigen::Vector2d d1 = sol.z.head<2>() - Eigen::Vector2d(140, 100);
    const Eigen::Vector2d d2 = sol.z.tail<2>() - Eigen::Vector2d(120, 200);
    EXPECT_NEAR((d1 + 10 * s.gradient.head<2>().normalized()).norm(), 0.0, 1e-6);
    EXPECT_NEAR((d2 + 10 * s.gradient.tail<2>().normalized()).norm(), 0.0, 1e-6);
    EXPECT_LE(sol.kkt_residual, 1e-6);
}

TEST(Subproblem, ZeroGradientKeepsExpansionPoint) {
    Surrogate s;
    s.expansion_point << 140, 100, 120, 200;
    SlotConstraints c;
    c.speed1 = {{140, 100}, 10};
    c.speed2 = {{120, 200}, 10};
    c.collision = linearize_collision({140, 100}, {120, 200}, 40);
    c.snr = {{100, 100}, 300};
    EXPECT_EQ(solve_subproblem(s, c).z, s.expansion_point);
}

TEST(Subproblem, RandomSamplingCertificate) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int inst = 0; inst < 20; ++inst) {
        const Eigen::Vector2d p1(100 + 20 * g(rng), 100 + 20 * g(rng));
        const Eigen::Vector2d p2 = p1 + (45 + 30 * u(rng)) * Eigen::Vector2d(g(rng), g(rng)).normalized();
        const Eigen::Vector2d target = p1 + 25 * Eigen::Vector2d(g(rng), g(rng)).normalized();
        Surrogate s;
        for (int k = 0; k < 4; ++k) s.gradient(k) = g(rng);
        s.expansion_point = stack(p1, p2);
        SlotConstraints c;
        c.speed1 = {p1, 10};
        c.speed2 = {p2, 10};
        c.collision = linearize_collision(p1, p2, 40);
        c.snr = {target, 27 + 10 * u(rng)};
        const SubproblemSolution sol = solve_subproblem(s, c);
        const Eigen::Vector2d q1 = sol.z.head<2>();
        const Eigen::Vector2d q2 = sol.z.tail<2>();
        EXPECT_LE((q1 - p1).norm(), 10 + 1e-9);
        EXPECT_LE((q2 - p2).norm(), 10 + 1e-9);
        EXPECT_LE((q1 - target).norm(), c.snr.radius + 1e-9);
        EXPECT_TRUE(c.collision.contains(sol.z, 1e-9));
        EXPECT_LE(sol.kkt_residual, 1e-6);
        const double best = s.gradient.dot(sol.z);
        const double scale = s.gradient.norm() * 10;
        int feasible = 0;
        for (int i = 0; i < 10000; ++i) {
            const JointPosition z = stack(sample_disk(rng, c.speed1), sample_disk(rng, c.speed2));
            if ((z.head<2>() - target).norm() > c.snr.radius || !c.collision.contains(z)) continue;
            ++feasible;
            EXPECT_LE(best, s.gradient.dot(z) + 1e-6 * scale);
        }
        EXPECT_GT(feasible, 100) << inst;
    }
}

TEST(Subproblem, InnerCutIsRespected) {
    Surrogate s;
    s.gradient << 1, 0, 0, 0;  // pulls UAV-1 toward -x, i.e. toward the target
    s.expansion_point << 130, 100, 120, 200;
    SlotConstraints c;
    c.speed1 = {{130, 100}, 10};
    c.speed2 = {{120, 200}, 10};
    c.collision = linearize_collision({130, 100}, {120, 200}, 40);
    c.snr = {{100, 100}, 300};
    c.snr_inner_active = true;
    c.snr_inner_normal = {1, 0};
    c.snr_inner_offset = 25 + 100;  // x >= 125
    const SubproblemSolution sol = solve_subproblem(s, c);
    EXPECT_NEAR(sol.z(0), 125, 1e-6);
    EXPECT_GE((sol.z.head<2>() - Eigen::Vector2d(100, 100)).norm(), 25 - 1e-9);
}

TEST(ScaStep, StationarySymmetricStart) {
    // Orthogonal bearings at offset H / sqrt(2) make the CRB gradient vanish.
    const ScenarioConfig c = default_config();
    PlannerSettings s = planner_settings(c, {Policy::NoComm, std::nullopt});
    const double r = 50 / std::sqrt(2.0);
    const TargetState t{100, 100, 0, 0};
    const UavPose a{{100 + r, 100}, 50};
    const UavPose b{{100, 100 + r}, 50};
    EXPECT_LT(crb_gradient(a, b, t, s.sensing).norm(), 1e-9 * predicted_crb(a, b, t, s.sensing).crb);
    const ScaResult res = sca_step(a, b, t, Eigen::Matrix4d::Identity(), s);
    EXPECT_EQ(res.q1.q, a.q);
    EXPECT_EQ(res.q2.q, b.q);
    EXPECT_EQ(res.trace.iterations, 1);
    EXPECT_TRUE(res.trace.converged);
}

TEST(ScaStep, EpisodeSlotsAreMonotoneAndFeasible) {
    const ScenarioConfig c = default_config();
    int slots = 0;
    int converged = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const EpisodeLog log = run_episode(c, {Policy::Proposed, std::nullopt}, seed);
        UavPose prev1 = log.q1_start;
        UavPose prev2 = log.q2_start;
        for (const auto& s : log.slots) {
            ++slots;
            converged += s.converged && s.sca_iterations <= 15;
            for (std::size_t k = 1; k < s.trace.objective.size(); ++k) {
                EXPECT_LE(s.trace.objective[k], s.trace.objective[k - 1]);
            }
            EXPECT_LE((s.q1.q - prev1.q).norm(), c.v_max * c.dt + 1e-9);
            EXPECT_LE((s.q2.q - prev2.q).norm(), c.v_max * c.dt + 1e-9);
            EXPECT_GE((s.q1.q - s.q2.q).norm(), c.d_min - 1e-9);
            if (!s.snr_infeasible) {
                const ChannelVector h = predicted_channel(s.q1, s.predicted.x_hat, c.channel);
                EXPECT_GE(worst_case_snr(h, {s.epsilon}, c.channel), c.gamma_c * (1 - 1e-9)) << s.n;
                EXPECT_TRUE(robust_snr_lmi_feasible(h, {s.epsilon}, c.gamma_c * (1 - 1e-6), c.channel));
            }
            prev1 = s.q1;
            prev2 = s.q2;
        }
    }
    EXPECT_GE(converged, 0.95 * slots);
}

TEST(ScaStep, SemiDynamicHoldsReceiver) {
    const ScenarioConfig c = default_config();
    const PlannerSettings s = planner_settings(c, {Policy::SemiDynamic, Eigen::Vector2d(180, 370)});
    EXPECT_TRUE(s.move1);
    EXPECT_FALSE(s.move2);
    const TargetState t{103.5, 103.5, 7, 7};
    const ScaResult res = sca_step({{140, 100}, 50}, {{180, 370}, 50}, t, Eigen::Matrix4d::Identity(), s);
    EXPECT_EQ(res.q2.q, Eigen::Vector2d(180, 370));
}
