#pragma once

#include "bisac/model.hpp"

#include <Eigen/Dense>

#include <utility>

namespace bisac {

constexpr double kSpeedOfLight = 299792458.0;

struct SensingParams {
    double a_tau = 1.2e-7;
    double sigma2_r = 1e-14;  // W
    double g_mf = 10.0;       // matched-filtering gain
    int n_t = 16;
    int n_r = 16;
    double p_t = 10.0;        // W
    double xi = 1.0;          // squared reflection-coefficient magnitude
    double c = kSpeedOfLight;
    /// Multiplies every delay variance (1 = physical model).
    double noise_scale = 1.0;

    void validate() const;
};

/// Per-leg delays UAV-m -> target, seconds.
struct Measurement {
    double tau1 = 0.0;
    double tau2 = 0.0;

    Eigen::Vector2d vec() const { return {tau1, tau2}; }
    static Measurement from_vec(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

/// Diagonal delay covariance R = diag(sigma_tau1^2, sigma_tau2^2).
struct MeasurementNoise {
    double var1 = 0.0;
    double var2 = 0.0;

    Eigen::Matrix2d matrix() const { return Eigen::Vector2d(var1, var2).asDiagonal(); }
};

struct CrbReport {
    double crb = 0.0;     // m^2
    double p_a = 0.0;     // 1/m^2
    double p_b = 0.0;
    double p_c = 0.0;
    double fim_condition = 0.0;
};

constexpr double kMaxFimCondition = 1e12;

/// a_tau^2 sigma_r^2 d^4 / (G P_t N_t N_r xi), scaled by noise_scale.
double delay_noise_variance(const UavPose& uav, const TargetState& target, const SensingParams& params);

Measurement true_delays(const UavPose& q1, const UavPose& q2, const TargetState& target,
                        const SensingParams& params);

MeasurementNoise measurement_noise(const UavPose& q1, const UavPose& q2, const TargetState& target,
                                   const SensingParams& params);

/// True delays plus independent zero-mean Gaussian errors; also returns the covariance used.
std::pair<Measurement, MeasurementNoise> generate_measurement(const UavPose& q1, const UavPose& q2,
                                                              const TargetState& target,
                                                              const SensingParams& params, Rng& rng);

/// d(tau_1, tau_2)/d(x, y, vx, vy); the velocity columns are identically zero.
Eigen::Matrix<double, 2, 4> measurement_jacobian(const UavPose& q1, const UavPose& q2,
                                                 const TargetState& state_estimate,
                                                 const SensingParams& params);

/// Position FIM C^T R^-1 C built from the Jacobian and an explicit noise covariance.
Eigen::Matrix2d fim(const UavPose& q1, const UavPose& q2, const TargetState& target,
                    const MeasurementNoise& noise, const SensingParams& params);

/// Position CRB trace((C^T R^-1 C)^-1) with R from the distance-dependent delay variance,
/// evaluated through the scalar entries P_a, P_b, P_c.
CrbReport crb(const UavPose& q1, const UavPose& q2, const TargetState& target, const SensingParams& params);

/// CRB with the target replaced by its one-step prediction.
CrbReport predicted_crb(const UavPose& q1, const UavPose& q2, const TargetState& predicted_target,
                        const SensingParams& params);

/// Analytic gradient of predicted_crb with respect to (q1x, q1y, q2x, q2y).
Eigen::Vector4d crb_gradient(const UavPose& q1, const UavPose& q2, const TargetState& predicted_target,
                             const SensingParams& params);

}  // namespace bisac
