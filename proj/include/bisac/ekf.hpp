#pragma once

#include "bisac/model.hpp"
#include "bisac/sensing.hpp"

#include <Eigen/Dense>

namespace bisac {

using MeasurementJacobian = Eigen::Matrix<double, 2, 4>;
using KalmanGain = Eigen::Matrix<double, 4, 2>;

struct EkfBelief {
    TargetState x_hat;
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
};

/// x[n|n-1] = G x[n-1],  M[n|n-1] = G M G^T + Q.
EkfBelief time_update(const EkfBelief& belief, const TransitionMatrix& g, const Eigen::Matrix4d& q);

/// K = M E^T (R + E M E^T)^-1; zero when M is exactly zero.
KalmanGain kalman_gain(const Eigen::Matrix4d& m_pred, const MeasurementJacobian& e, const MeasurementNoise& r);

/// x = x_pred + K (y - y_pred),  M = (I - K E) M_pred, symmetrized.
EkfBelief measurement_update(const EkfBelief& pred_belief, const KalmanGain& k, const Measurement& y,
                             const Measurement& predicted_meas, const MeasurementJacobian& e);

/// Correction step of the tracker. One pass is the standard EKF; additional passes relinearize
/// the delay model at the refreshed estimate (iterated EKF), each pass being the update above with
/// the effective prediction e(x_i) + E_i (x_pred - x_i).
EkfBelief correct(const EkfBelief& pred_belief, const UavPose& q1, const UavPose& q2, const Measurement& y,
                  const MeasurementNoise& r, const SensingParams& params, int passes = 1);

}  // namespace bisac
