#pragma once

#include "bisac/channel.hpp"
#include "bisac/model.hpp"
#include "bisac/sensing.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace bisac {

/// Stacked decision vector z = (q1x, q1y, q2x, q2y).
using JointPosition = Eigen::Vector4d;

JointPosition stack(const Eigen::Vector2d& q1, const Eigen::Vector2d& q2);

/// First-order model of the predicted CRB around an expansion point.
struct Surrogate {
    double base_value = 0.0;
    Eigen::Vector4d gradient = Eigen::Vector4d::Zero();
    JointPosition expansion_point = JointPosition::Zero();

    double evaluate(const JointPosition& z) const { return base_value + gradient.dot(z - expansion_point); }
};

Surrogate linearize_crb(const UavPose& q1_k, const UavPose& q2_k, const TargetState& predicted_target,
                        const SensingParams& params);

/// normal^T z >= offset on the stacked positions.
struct Halfspace {
    Eigen::Vector4d normal = Eigen::Vector4d::Zero();
    double offset = 0.0;

    bool contains(const JointPosition& z, double slack = 0.0) const { return normal.dot(z) >= offset - slack; }
};

/// 2 (q1_k - q2_k)^T (q1 - q2) - |q1_k - q2_k|^2 >= dmin^2, an inner approximation of |q1 - q2| >= dmin.
Halfspace linearize_collision(const Eigen::Vector2d& q1_k, const Eigen::Vector2d& q2_k, double dmin);

/// Largest horizontal UAV-1/target offset r for which every radius in [0, r] meets the robust
/// SNR target. Infinite when gamma_c == 0 or the target is met everywhere on the scan.
double snr_feasible_radius(const TargetState& predicted_target, double uav1_height, const ErrorBall& ball,
                           double gamma_c, const ChannelParams& params);

/// Horizontal offsets [inner, outer] from the predicted target at which the robust SNR target
/// holds. The LoS probability grows away from the zenith, so the set can exclude r = 0.
struct SnrInterval {
    double inner = 0.0;
    double outer = std::numeric_limits<double>::infinity();
};

/// First feasible interval of the same 1 m scan plus 1e-3 m bisection. Throws SnrInfeasible
/// when no offset up to the scan limit qualifies.
SnrInterval snr_feasible_interval(double uav1_height, const ErrorBall& ball, double gamma_c,
                                  const ChannelParams& params);

struct Disk {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
};

struct SlotConstraints {
    Disk speed1;
    Disk speed2;
    Halfspace collision;
    Disk snr;  // centered at the predicted target; radius may be infinite
    /// snr_inner_normal^T q1 >= snr_inner_offset; linearized |q1 - u_hat| >= inner radius.
    bool snr_inner_active = false;
    Eigen::Vector2d snr_inner_normal = Eigen::Vector2d::Zero();
    double snr_inner_offset = 0.0;
    bool move1 = true;
    bool move2 = true;
};

struct SubproblemSolution {
    JointPosition z = JointPosition::Zero();
    double kkt_residual = 0.0;
    int newton_steps = 0;
};

/// Minimizes the affine surrogate over the slot's convex constraint set.
SubproblemSolution solve_subproblem(const Surrogate& surrogate, const SlotConstraints& constraints);

struct ScaTrace {
    std::vector<double> objective;   // predicted CRB at each accepted iterate, starting point first
    std::vector<double> step_norms;  // |z_{k+1} - z_k|
    std::vector<int> halvings;
    std::vector<JointPosition> iterates;
    bool converged = false;
    int iterations = 0;
    /// Set when the start violated the SNR disk; holds the objective before the restoring step.
    std::optional<double> restored_from;
};

struct PlannerSettings {
    SensingParams sensing;
    ChannelParams channel;
    double v_max = 20.0;
    double dt = 0.5;
    double d_min = 40.0;
    double gamma_c = 0.0;  // linear; 0 drops the communication constraint
    double psi = 0.0;
    double eta = 1e-3;
    int k_max = 20;
    int max_halvings = 8;
    bool move1 = true;
    bool move2 = true;
};

struct ScaResult {
    UavPose q1;
    UavPose q2;
    ScaTrace trace;
    ErrorBall ball;
    double snr_radius = 0.0;
    double snr_inner_radius = 0.0;
};

/// One slot of the successive convex approximation: linearize, solve, accept on true decrease
/// (halving toward the expansion point otherwise) until the relative change drops below eta.
ScaResult sca_step(const UavPose& prev_q1, const UavPose& prev_q2, const TargetState& predicted_target,
                   const Eigen::Matrix4d& m_pred, const PlannerSettings& settings);

}  // namespace bisac
