#pragma once

#include "bisac/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace bisac {

using ChannelVector = Eigen::VectorXcd;

double db_to_linear(double db);
double linear_to_db(double linear);
/// P[W] = 10^((P[dBm] - 30) / 10)
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Air-to-ground link parameters, all linear units.
struct ChannelParams {
    double e1 = 25.0;
    double e2 = 0.112;
    double beta0 = 1e-6;       // gain at 1 m
    double kappa_nlos = 0.01;  // NLoS attenuation
    double alpha = 2.0;        // path-loss exponent
    int n_t = 16;
    double p_t = 10.0;         // W
    double sigma2_c = 1e-14;   // W

    void validate() const;
};

struct ErrorBall {
    double epsilon = 0.0;
};

double los_probability(double theta_deg, const ChannelParams& params);

/// beta_d * d^-alpha, with beta_d mixing LoS and attenuated NLoS power.
double channel_gain(double theta_deg, double distance, const ChannelParams& params);

/// Half-wavelength ULA response, unit norm: entry k is e^{j pi k cos(theta)} / sqrt(n_t).
ChannelVector steering_vector(double theta_deg, int n_t);

ChannelVector channel_vector(const UavPose& uav1, const TargetState& target, const ChannelParams& params);

/// Same model as channel_vector, evaluated at the one-step prediction.
ChannelVector predicted_channel(const UavPose& uav1, const TargetState& predicted_target,
                                const ChannelParams& params);

/// P_t |h^H f|^2 / sigma_c^2 for a beamformer with ||f|| <= 1.
double snr(const ChannelVector& h, const ChannelVector& f, const ChannelParams& params);

/// Unit-power beamformer matched to h (zero vector when h is zero).
ChannelVector matched_beamformer(const ChannelVector& h);

/// epsilon = psi * ||M||_F. Rejects non-symmetric or indefinite M.
ErrorBall error_radius(const Eigen::Matrix4d& m_pred, double psi);

/// Minimum of P_t |(h_hat + dh)^H f|^2 / sigma_c^2 over ||dh|| <= epsilon with f = h_hat/||h_hat||,
/// i.e. P_t (||h_hat|| - epsilon)_+^2 / sigma_c^2.
double worst_case_snr(const ChannelVector& h_hat, const ErrorBall& ball, const ChannelParams& params);

/// Largest eigenvalue-margin found by the multiplier search, plus the multiplier attaining it.
struct LmiCertificate {
    bool feasible = false;
    double multiplier = 0.0;
    double min_eigenvalue = 0.0;
};

/// S-procedure form of the robust SNR requirement. For f = h_hat/||h_hat||, the implication
///   ||dh||^2 <= eps^2  =>  gamma_c sigma_c^2 - P_t |(h_hat + dh)^H f|^2 <= 0
/// holds iff some mu >= 0 makes
///   [ mu I + P_t f f^H        P_t f f^H h_hat                        ]
///   [ P_t h_hat^H f f^H       P_t |f^H h_hat|^2 - gamma_c sigma_c^2 - mu eps^2 ]  >= 0.
/// The block matrix is evaluated in normalized units and searched over mu.
LmiCertificate robust_snr_lmi(const ChannelVector& h_hat, const ErrorBall& ball, double gamma_c,
                              const ChannelParams& params);

bool robust_snr_lmi_feasible(const ChannelVector& h_hat, const ErrorBall& ball, double gamma_c,
                             const ChannelParams& params);

/// One (prediction, truth) pair for psi calibration.
struct PsiSample {
    double channel_error = 0.0;      // ||h_true - h_hat||
    double covariance_norm = 0.0;    // ||M[n|n-1]||_F
};

/// Smallest psi with ||dh|| <= psi ||M||_F on at least `coverage` of the samples.
/// Returns 0 when every sample is exact, whatever the covariances.
double calibrate_psi_from_samples(std::span<const PsiSample> samples, double coverage);

}  // namespace bisac
