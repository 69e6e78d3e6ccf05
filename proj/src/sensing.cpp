#include "bisac/sensing.hpp"

#include "bisac/errors.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace bisac {

void SensingParams::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(a_tau > 0.0)) fail("a_tau must be positive");
    if (!(sigma2_r > 0.0)) fail("sigma2_r must be positive");
    if (!(g_mf > 0.0)) fail("matched-filter gain must be positive");
    if (n_t < 1 || n_r < 1) fail("antenna counts must be positive");
    if (!(p_t > 0.0)) fail("p_t must be positive");
    if (!(xi > 0.0)) fail("xi must be positive");
    if (!(c > 0.0)) fail("c must be positive");
    if (!(noise_scale >= 0.0)) fail("noise_scale must be nonnegative");
}

namespace {

// sigma_tau^2 = k * s^2 where s = squared slant distance.
double variance_coefficient(const SensingParams& p) {
    return p.noise_scale * p.a_tau * p.a_tau * p.sigma2_r /
           (p.g_mf * p.p_t * static_cast<double>(p.n_t) * static_cast<double>(p.n_r) * p.xi);
}

double squared_slant(const UavPose& uav, const Eigen::Vector2d& target) {
    return (target - uav.q).squaredNorm() + uav.height * uav.height;
}

struct FimEntries {
    double p_a = 0.0;
    double p_b = 0.0;
    double p_c = 0.0;
};

FimEntries scalar_fim(const UavPose& q1, const UavPose& q2, const Eigen::Vector2d& u,
                      const SensingParams& params) {
    FimEntries e;
    const double c2 = params.c * params.c;
    for (const UavPose* uav : {&q1, &q2}) {
        const Eigen::Vector2d delta = u - uav->q;
        const double s = squared_slant(*uav, u);
        const double var = variance_coefficient(params) * s * s;
        const double denom = c2 * var * s;
        e.p_a += delta.x() * delta.x() / denom;
        e.p_b += delta.y() * delta.y() / denom;
        e.p_c += delta.x() * delta.y() / denom;
    }
    return e;
}

double condition_number(const FimEntries& e) {
    const double mean = 0.5 * (e.p_a + e.p_b);
    const double half_gap = std::hypot(0.5 * (e.p_a - e.p_b), e.p_c);
    const double lmax = mean + half_gap;
    const double lmin = mean - half_gap;
    if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
    return lmax / lmin;
}

}  // namespace

double delay_noise_variance(const UavPose& uav, const TargetState& target, const SensingParams& params) {
    const double s = squared_slant(uav, target.position());
    return variance_coefficient(params) * s * s;
}

Measurement true_delays(const UavPose& q1, const UavPose& q2, const TargetState& target,
                        const SensingParams& params) {
    return {slant_distance(q1, target) / params.c, slant_distance(q2, target) / params.c};
}

MeasurementNoise measurement_noise(const UavPose& q1, const UavPose& q2, const TargetState& target,
                                   const SensingParams& params) {
    return {delay_noise_variance(q1, target, params), delay_noise_variance(q2, target, params)};
}

std::pair<Measurement, MeasurementNoise> generate_measurement(const UavPose& q1, const UavPose& q2,
                                                              const TargetState& target,
                                                              const SensingParams& params, Rng& rng) {
    const Measurement clean = true_delays(q1, q2, target, params);
    const MeasurementNoise noise = measurement_noise(q1, q2, target, params);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double z1 = unit(rng);
    const double z2 = unit(rng);
    return {{clean.tau1 + std::sqrt(noise.var1) * z1, clean.tau2 + std::sqrt(noise.var2) * z2}, noise};
}

Eigen::Matrix<double, 2, 4> measurement_jacobian(const UavPose& q1, const UavPose& q2,
                                                 const TargetState& state_estimate,
                                                 const SensingParams& params) {
    Eigen::Matrix<double, 2, 4> e = Eigen::Matrix<double, 2, 4>::Zero();
    const std::array<const UavPose*, 2> uavs{&q1, &q2};
    for (int m = 0; m < 2; ++m) {
        const Eigen::Vector2d delta = state_estimate.position() - uavs[m]->q;
        const double d = slant_distance(*uavs[m], state_estimate);
        e(m, 0) = delta.x() / (params.c * d);
        e(m, 1) = delta.y() / (params.c * d);
    }
    return e;
}

Eigen::Matrix2d fim(const UavPose& q1, const UavPose& q2, const TargetState& target,
                    const MeasurementNoise& noise, const SensingParams& params) {
    if (!(noise.var1 > 0.0 && noise.var2 > 0.0)) {
        throw Error(ErrorCode::InvalidCovariance, "measurement covariance must be positive definite");
    }
    const Eigen::Matrix2d c = measurement_jacobian(q1, q2, target, params).leftCols<2>();
    const Eigen::Matrix2d r_inv = Eigen::Vector2d(1.0 / noise.var1, 1.0 / noise.var2).asDiagonal();
    const Eigen::Matrix2d j = c.transpose() * r_inv * c;
    return 0.5 * (j + j.transpose());
}

CrbReport crb(const UavPose& q1, const UavPose& q2, const TargetState& target, const SensingParams& params) {
    const double k = variance_coefficient(params);
    if (!(k >= 0.0)) {
        throw Error(ErrorCode::InvalidCovariance, "delay noise variance must be nonnegative");
    }
    if (k == 0.0) {
        // Noiseless limit: the FIM diverges, the bound is zero wherever the geometry is regular.
        SensingParams unit = params;
        unit.noise_scale = 1.0;
        CrbReport report = crb(q1, q2, target, unit);
        report.p_a = report.p_b = std::numeric_limits<double>::infinity();
        report.p_c = report.p_c == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), report.p_c);
        report.crb = 0.0;
        return report;
    }
    const FimEntries e = scalar_fim(q1, q2, target.position(), params);
    CrbReport report;
    report.p_a = e.p_a;
    report.p_b = e.p_b;
    report.p_c = e.p_c;
    report.fim_condition = condition_number(e);
    if (!(report.fim_condition <= kMaxFimCondition)) {
        throw Error(ErrorCode::GeometrySingular,
                    "FIM condition number " + std::to_string(report.fim_condition) + " exceeds limit");
    }
    report.crb = (e.p_a + e.p_b) / (e.p_a * e.p_b - e.p_c * e.p_c);
    return report;
}

CrbReport predicted_crb(const UavPose& q1, const UavPose& q2, const TargetState& predicted_target,
                        const SensingParams& params) {
    return crb(q1, q2, predicted_target, params);
}

Eigen::Vector4d crb_gradient(const UavPose& q1, const UavPose& q2, const TargetState& predicted_target,
                             const SensingParams& params) {
    // CRB = tr(J^-1) with J = sum_m g(s_m) d_m d_m^T, d_m = u - q_m, g(s) = 1/(c^2 k s^3).
    // dCRB = -tr(J^-2 dJ) and dd_m = -dq_m, which gives
    //   dCRB/dq_m = 2 g_m [ W d_m - 3 (d_m^T W d_m / s_m) d_m ],  W = J^-2.
    if (variance_coefficient(params) == 0.0) {
        crb(q1, q2, predicted_target, params);  // geometry check only
        return Eigen::Vector4d::Zero();
    }
    const FimEntries e = scalar_fim(q1, q2, predicted_target.position(), params);
    if (!(condition_number(e) <= kMaxFimCondition)) {
        throw Error(ErrorCode::GeometrySingular, "crb_gradient at a singular geometry");
    }
    Eigen::Matrix2d j;
    j << e.p_a, e.p_c, e.p_c, e.p_b;
    const Eigen::Matrix2d j_inv = j.inverse();
    const Eigen::Matrix2d w = j_inv * j_inv;

    const double k = variance_coefficient(params);
    const double c2 = params.c * params.c;
    const Eigen::Vector2d u = predicted_target.position();
    Eigen::Vector4d grad;
    const std::array<const UavPose*, 2> uavs{&q1, &q2};
    for (int m = 0; m < 2; ++m) {
        const Eigen::Vector2d delta = u - uavs[m]->q;
        const double s = squared_slant(*uavs[m], u);
        const double g = 1.0 / (c2 * k * s * s * s);
        const Eigen::Vector2d wd = w * delta;
        grad.segment<2>(2 * m) = 2.0 * g * (wd - 3.0 * delta.dot(wd) / s * delta);
    }
    return grad;
}

}  // namespace bisac
