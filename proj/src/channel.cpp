#include "bisac/channel.hpp"

#include "bisac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace bisac {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

void ChannelParams::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(beta0 > 0.0)) fail("beta0 must be positive");
    if (!(kappa_nlos > 0.0 && kappa_nlos <= 1.0)) fail("kappa_nlos must lie in (0, 1]");
    if (!(alpha > 0.0)) fail("alpha must be positive");
    if (n_t < 1) fail("n_t must be at least 1");
    if (!(p_t > 0.0)) fail("p_t must be positive");
    if (!(sigma2_c > 0.0)) fail("sigma2_c must be positive");
}

double los_probability(double theta_deg, const ChannelParams& params) {
    if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
        throw Error(ErrorCode::InvalidInput, "angle outside [0, 90] degrees: " + std::to_string(theta_deg));
    }
    return 1.0 / (1.0 + params.e1 * std::exp(-params.e2 * (theta_deg - params.e1)));
}

double channel_gain(double theta_deg, double distance, const ChannelParams& params) {
    const double p_los = los_probability(theta_deg, params);
    const double beta_d = params.beta0 * (p_los + (1.0 - p_los) * params.kappa_nlos);
    return beta_d * std::pow(distance, -params.alpha);
}

ChannelVector steering_vector(double theta_deg, int n_t) {
    const double phase = std::numbers::pi * std::cos(theta_deg * std::numbers::pi / 180.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
    ChannelVector a(n_t);
    for (int k = 0; k < n_t; ++k) {
        a(k) = std::polar(scale, phase * k);
    }
    return a;
}

ChannelVector channel_vector(const UavPose& uav1, const TargetState& target, const ChannelParams& params) {
    const double theta = elevation_angle_deg(uav1, target);
    const double d = slant_distance(uav1, target);
    return std::sqrt(channel_gain(theta, d, params)) * steering_vector(theta, params.n_t);
}

ChannelVector predicted_channel(const UavPose& uav1, const TargetState& predicted_target,
                                const ChannelParams& params) {
    return channel_vector(uav1, predicted_target, params);
}

double snr(const ChannelVector& h, const ChannelVector& f, const ChannelParams& params) {
    if (f.norm() > 1.0 + 1e-9) {
        throw Error(ErrorCode::InvalidInput, "beamformer exceeds unit power");
    }
    return params.p_t * std::norm(h.dot(f)) / params.sigma2_c;
}

ChannelVector matched_beamformer(const ChannelVector& h) {
    const double n = h.norm();
    if (n == 0.0) return ChannelVector::Zero(h.size());
    return h / n;
}

ErrorBall error_radius(const Eigen::Matrix4d& m_pred, double psi) {
    if (!(psi >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "psi must be nonnegative");
    }
    const double scale = std::max(1.0, m_pred.cwiseAbs().maxCoeff());
    if (!m_pred.allFinite() || (m_pred - m_pred.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw Error(ErrorCode::InvalidCovariance, "predicted covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m_pred, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw Error(ErrorCode::InvalidCovariance, "predicted covariance is not positive semidefinite");
    }
    return {psi * m_pred.norm()};
}

double worst_case_snr(const ChannelVector& h_hat, const ErrorBall& ball, const ChannelParams& params) {
    const double margin = std::max(h_hat.norm() - ball.epsilon, 0.0);
    return params.p_t * margin * margin / params.sigma2_c;
}

namespace {

// Block matrix of the S-procedure certificate in units where ||h_hat|| = 1 and
// gamma_c sigma_c^2 = 1; `gain` is the matched SNR over gamma_c.
class NormalizedLmi {
public:
    NormalizedLmi(const ChannelVector& h_unit, double gain, double eps_rel)
        : n_(static_cast<int>(h_unit.size())), eps2_(eps_rel * eps_rel), base_(n_ + 1, n_ + 1) {
        const ChannelVector f = h_unit;  // matched beamformer
        const Eigen::MatrixXcd ff = f * f.adjoint();
        const ChannelVector b = gain * ff * h_unit;
        base_.setZero();
        base_.topLeftCorner(n_, n_) = gain * ff;
        base_.topRightCorner(n_, 1) = b;
        base_.bottomLeftCorner(1, n_) = b.adjoint();
        base_(n_, n_) = gain * std::norm(f.dot(h_unit)) - 1.0;
        scale_ = base_.cwiseAbs().maxCoeff() + 1.0;
    }

    double min_eigenvalue(double mu) const {
        Eigen::MatrixXcd m = base_;
        for (int i = 0; i < n_; ++i) m(i, i) += mu;
        m(n_, n_) -= mu * eps2_;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
        return eig.eigenvalues()(0);
    }

    double scale() const { return scale_; }

private:
    int n_;
    double eps2_;
    Eigen::MatrixXcd base_;
    double scale_ = 1.0;
};

}  // namespace

LmiCertificate robust_snr_lmi(const ChannelVector& h_hat, const ErrorBall& ball, double gamma_c,
                              const ChannelParams& params) {
    if (!(gamma_c > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "robust_snr_lmi requires gamma_c > 0");
    }
    const double h_norm = h_hat.norm();
    if (h_norm == 0.0) {
        // Bottom-right entry is -gamma_c sigma_c^2 - mu eps^2 < 0 for every mu.
        return {false, 0.0, -1.0};
    }
    const double gain = params.p_t * h_norm * h_norm / (gamma_c * params.sigma2_c);
    if (ball.epsilon == 0.0) {
        // Degenerate ball {0}: the supremum over mu is approached only as mu -> inf and equals
        // the Schur complement of the identity block, gain - 1.
        return {gain >= 1.0, std::numeric_limits<double>::infinity(), gain - 1.0};
    }
    const NormalizedLmi lmi(h_hat / h_norm, gain, ball.epsilon / h_norm);

    // lambda_min is concave in mu: bracket the maximizer by doubling, then golden-section.
    double lo = 0.0;
    double hi = 1.0;
    double f_hi = lmi.min_eigenvalue(hi);
    constexpr double kMuCap = 1e15;
    while (hi < kMuCap) {
        const double f_next = lmi.min_eigenvalue(2.0 * hi);
        if (f_next <= f_hi) break;
        lo = hi / 2.0;
        hi *= 2.0;
        f_hi = f_next;
    }
    hi *= 2.0;

    LmiCertificate best{false, 0.0, lmi.min_eigenvalue(0.0)};
    auto consider = [&](double mu, double value) {
        if (value > best.min_eigenvalue) {
            best.min_eigenvalue = value;
            best.multiplier = mu;
        }
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = lmi.min_eigenvalue(c);
    double fd = lmi.min_eigenvalue(d);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + b); ++it) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = lmi.min_eigenvalue(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = lmi.min_eigenvalue(c);
        }
    }
    consider(c, fc);
    consider(d, fd);

    best.feasible = best.min_eigenvalue >= -1e-13 * lmi.scale();
    return best;
}

bool robust_snr_lmi_feasible(const ChannelVector& h_hat, const ErrorBall& ball, double gamma_c,
                             const ChannelParams& params) {
    return robust_snr_lmi(h_hat, ball, gamma_c, params).feasible;
}

double calibrate_psi_from_samples(std::span<const PsiSample> samples, double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0)) {
        throw Error(ErrorCode::InvalidInput, "coverage must lie in (0, 1)");
    }
    if (samples.empty()) {
        throw Error(ErrorCode::CalibrationDegenerate, "no calibration samples");
    }
    std::vector<double> ratios;
    ratios.reserve(samples.size());
    bool any_covariance = false;
    for (const auto& s : samples) {
        if (s.covariance_norm > 0.0) {
            any_covariance = true;
            ratios.push_back(s.channel_error / s.covariance_norm);
        } else {
            ratios.push_back(s.channel_error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
    }
    const bool all_exact = std::all_of(samples.begin(), samples.end(),
                                       [](const PsiSample& s) { return s.channel_error == 0.0; });
    if (all_exact) return 0.0;
    if (!any_covariance) {
        throw Error(ErrorCode::CalibrationDegenerate, "every sampled prediction covariance is zero");
    }
    std::sort(ratios.begin(), ratios.end());
    const auto n = ratios.size();
    auto k = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    const double psi = ratios[k - 1];
    if (!std::isfinite(psi)) {
        throw Error(ErrorCode::CalibrationDegenerate, "channel error with zero covariance exceeds coverage budget");
    }
    return psi;
}

}  // namespace bisac
