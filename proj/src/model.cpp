#include "bisac/model.hpp"

#include "bisac/errors.hpp"

#include <cmath>
#include <numbers>

namespace bisac {

bool TargetState::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(vx) && std::isfinite(vy);
}

Eigen::Matrix4d MotionNoise::covariance() const {
    return Eigen::Vector4d(sigma2_x, sigma2_y, sigma2_vx, sigma2_vy).asDiagonal();
}

MotionNoise MotionNoise::scaled(double factor) const {
    return {sigma2_x * factor, sigma2_y * factor, sigma2_vx * factor, sigma2_vy * factor};
}

TransitionMatrix::TransitionMatrix(double dt) : dt_(dt), g_(Eigen::Matrix4d::Identity()) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw Error(ErrorCode::InvalidConfig, "slot duration must be positive, got " + std::to_string(dt));
    }
    g_(0, 2) = dt;
    g_(1, 3) = dt;
}

TransitionMatrix build_transition_matrix(double dt) { return TransitionMatrix(dt); }

namespace {

double draw(Rng& rng, double variance) {
    if (variance <= 0.0) return 0.0;
    std::normal_distribution<double> n(0.0, std::sqrt(variance));
    return n(rng);
}

}  // namespace

TargetState propagate_target(const TargetState& s, double dt, const MotionNoise& noise, Rng& rng) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "propagate_target: dt must be positive");
    }
    // Draw order is fixed (x, y, vx, vy) so seeded runs are reproducible.
    const double wx = draw(rng, noise.sigma2_x);
    const double wy = draw(rng, noise.sigma2_y);
    const double wvx = draw(rng, noise.sigma2_vx);
    const double wvy = draw(rng, noise.sigma2_vy);
    return {s.x + s.vx * dt + wx, s.y + s.vy * dt + wy, s.vx + wvx, s.vy + wvy};
}

double horizontal_distance(const UavPose& p, const TargetState& t) {
    return (p.q - t.position()).norm();
}

double slant_distance(const UavPose& p, const TargetState& t) {
    return std::hypot(horizontal_distance(p, t), p.height);
}

double elevation_angle_deg(const UavPose& p, const TargetState& t) {
    // atan2 is better conditioned than acos(H/d) near the zenith.
    return std::atan2(horizontal_distance(p, t), p.height) * 180.0 / std::numbers::pi;
}

bool check_speed(const UavPose& prev, const UavPose& next, double vmax, double dt) {
    return (next.q - prev.q).norm() <= vmax * dt + kConstraintSlack;
}

bool check_separation(const UavPose& a, const UavPose& b, double dmin) {
    return (a.q - b.q).norm() >= dmin - kConstraintSlack;
}

}  // namespace bisac
