#include "bisac/ekf.hpp"

#include "bisac/errors.hpp"

#include <cmath>

namespace bisac {

namespace {

Eigen::Matrix4d symmetrized(const Eigen::Matrix4d& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

EkfBelief time_update(const EkfBelief& belief, const TransitionMatrix& g, const Eigen::Matrix4d& q) {
    const Eigen::Matrix4d& gm = g.matrix();
    return {g.apply(belief.x_hat), symmetrized(gm * belief.m * gm.transpose() + q)};
}

KalmanGain kalman_gain(const Eigen::Matrix4d& m_pred, const MeasurementJacobian& e, const MeasurementNoise& r) {
    // A certain prediction ignores the measurement, even a noiseless one.
    if (m_pred.isZero(0.0)) return KalmanGain::Zero();
    const Eigen::Matrix2d s = r.matrix() + e * m_pred * e.transpose();
    const double det = s.determinant();
    const double scale = s.cwiseAbs().maxCoeff();
    if (!std::isfinite(det) || !(scale > 0.0) || std::abs(det) <= 1e-14 * scale * scale) {
        throw Error(ErrorCode::NumericalBreakdown, "innovation covariance is singular");
    }
    return m_pred * e.transpose() * s.inverse();
}

EkfBelief measurement_update(const EkfBelief& pred_belief, const KalmanGain& k, const Measurement& y,
                             const Measurement& predicted_meas, const MeasurementJacobian& e) {
    const Eigen::Vector4d x = pred_belief.x_hat.vec() + k * (y.vec() - predicted_meas.vec());
    const Eigen::Matrix4d m = (Eigen::Matrix4d::Identity() - k * e) * pred_belief.m;
    return {TargetState::from_vec(x), symmetrized(m)};
}

EkfBelief correct(const EkfBelief& pred_belief, const UavPose& q1, const UavPose& q2, const Measurement& y,
                  const MeasurementNoise& r, const SensingParams& params, int passes) {
    if (passes < 1) {
        throw Error(ErrorCode::InvalidConfig, "EKF correction needs at least one pass");
    }
    const Eigen::Vector4d x_pred = pred_belief.x_hat.vec();
    EkfBelief out = pred_belief;
    TargetState linearization = pred_belief.x_hat;
    for (int i = 0; i < passes; ++i) {
        const MeasurementJacobian e = measurement_jacobian(q1, q2, linearization, params);
        const KalmanGain k = kalman_gain(pred_belief.m, e, r);
        const Eigen::Vector2d effective =
            true_delays(q1, q2, linearization, params).vec() + e * (x_pred - linearization.vec());
        out = measurement_update(pred_belief, k, y, Measurement::from_vec(effective), e);
        linearization = out.x_hat;
    }
    return out;
}

}  // namespace bisac
