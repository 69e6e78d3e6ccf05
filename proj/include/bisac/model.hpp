#pragma once

#include <Eigen/Dense>

#include <random>

namespace bisac {

using Rng = std::mt19937_64;

/// Planar position and velocity of the ground target, ordered [x, y, vx, vy].
struct TargetState {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;

    Eigen::Vector4d vec() const { return {x, y, vx, vy}; }
    Eigen::Vector2d position() const { return {x, y}; }
    Eigen::Vector2d velocity() const { return {vx, vy}; }
    bool finite() const;

    static TargetState from_vec(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

/// Horizontal UAV position at a fixed flight altitude.
struct UavPose {
    Eigen::Vector2d q = Eigen::Vector2d::Zero();
    double height = 1.0;

    UavPose with_position(const Eigen::Vector2d& p) const { return {p, height}; }
};

/// Variances of the four additive transition noises (m^2 and (m/s)^2).
struct MotionNoise {
    double sigma2_x = 0.0;
    double sigma2_y = 0.0;
    double sigma2_vx = 0.0;
    double sigma2_vy = 0.0;

    Eigen::Matrix4d covariance() const;
    MotionNoise scaled(double factor) const;
};

/// Constant-velocity transition over one slot.
class TransitionMatrix {
public:
    explicit TransitionMatrix(double dt);

    double dt() const { return dt_; }
    const Eigen::Matrix4d& matrix() const { return g_; }
    TargetState apply(const TargetState& s) const { return TargetState::from_vec(g_ * s.vec()); }

private:
    double dt_;
    Eigen::Matrix4d g_;
};

TransitionMatrix build_transition_matrix(double dt);

/// One step of the noisy constant-velocity model; zero variances skip the draw.
TargetState propagate_target(const TargetState& s, double dt, const MotionNoise& noise, Rng& rng);

double horizontal_distance(const UavPose& p, const TargetState& t);
double slant_distance(const UavPose& p, const TargetState& t);

/// Angle between the vertical and the UAV-target line, degrees in [0, 90).
double elevation_angle_deg(const UavPose& p, const TargetState& t);

constexpr double kConstraintSlack = 1e-9;

bool check_speed(const UavPose& prev, const UavPose& next, double vmax, double dt);
bool check_separation(const UavPose& a, const UavPose& b, double dmin);

}  // namespace bisac
