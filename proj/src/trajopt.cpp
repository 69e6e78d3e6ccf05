#include "bisac/trajopt.hpp"

#include "bisac/barrier_solver.hpp"
#include "bisac/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bisac {

JointPosition stack(const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
    JointPosition z;
    z << q1, q2;
    return z;
}

Surrogate linearize_crb(const UavPose& q1_k, const UavPose& q2_k, const TargetState& predicted_target,
                        const SensingParams& params) {
    Surrogate s;
    s.base_value = predicted_crb(q1_k, q2_k, predicted_target, params).crb;
    s.gradient = crb_gradient(q1_k, q2_k, predicted_target, params);
    s.expansion_point = stack(q1_k.q, q2_k.q);
    return s;
}

Halfspace linearize_collision(const Eigen::Vector2d& q1_k, const Eigen::Vector2d& q2_k, double dmin) {
    const Eigen::Vector2d delta = q1_k - q2_k;
    if (delta.norm() <= 1e-6) {
        throw Error(ErrorCode::DegenerateLinearization, "UAV expansion points coincide");
    }
    Halfspace h;
    h.normal << 2.0 * delta, -2.0 * delta;
    h.offset = dmin * dmin + delta.squaredNorm();
    return h;
}

namespace {

// ||h_hat(r)|| for UAV-1 at horizontal offset r from the predicted target.
double predicted_channel_norm(double r, double height, const ChannelParams& params) {
    const double d = std::hypot(r, height);
    const double theta = std::atan2(r, height) * 180.0 / std::numbers::pi;
    return std::sqrt(channel_gain(theta, d, params));
}

}  // namespace

double snr_feasible_radius(const TargetState& predicted_target, double uav1_height, const ErrorBall& ball,
                           double gamma_c, const ChannelParams& params) {
    (void)predicted_target;  // the radial model depends only on the offset from the target
    if (!(gamma_c >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "gamma_c must be nonnegative");
    }
    if (gamma_c == 0.0) return std::numeric_limits<double>::infinity();

    // wc_snr >= gamma_c  <=>  ||h_hat|| >= eps + sqrt(gamma_c sigma_c^2 / P_t)
    const double required = ball.epsilon + std::sqrt(gamma_c * params.sigma2_c / params.p_t);
    auto feasible = [&](double r) { return predicted_channel_norm(r, uav1_height, params) >= required; };

    if (!feasible(0.0)) {
        throw Error(ErrorCode::SnrInfeasible, "robust SNR target unmet even directly above the predicted target");
    }
    constexpr double kScanStep = 1.0;
    constexpr double kScanLimit = 1e5;
    double lo = 0.0;
    while (true) {
        const double next = lo + kScanStep;
        if (next > kScanLimit) return std::numeric_limits<double>::infinity();
        if (!feasible(next)) break;
        lo = next;
    }
    double hi = lo + kScanStep;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

SnrInterval snr_feasible_interval(double uav1_height, const ErrorBall& ball, double gamma_c,
                                  const ChannelParams& params) {
    if (!(gamma_c >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "gamma_c must be nonnegative");
    }
    SnrInterval out;
    if (gamma_c == 0.0) return out;
    const double required = ball.epsilon + std::sqrt(gamma_c * params.sigma2_c / params.p_t);
    auto feasible = [&](double r) { return predicted_channel_norm(r, uav1_height, params) >= required; };
    auto refine = [&](double lo, double hi) {  // feasible(lo) != feasible(hi)
        const bool lo_ok = feasible(lo);
        while (hi - lo > 1e-3) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) == lo_ok ? lo : hi) = mid;
        }
        return lo_ok ? lo : hi;
    };
    constexpr double kScanStep = 1.0;
    constexpr double kScanLimit = 1e5;

    double r = 0.0;
    if (!feasible(0.0)) {
        while (r + kScanStep <= kScanLimit && !feasible(r + kScanStep)) r += kScanStep;
        if (r + kScanStep > kScanLimit) {
            throw Error(ErrorCode::SnrInfeasible, "robust SNR target unmet at every UAV-1 offset");
        }
        out.inner = refine(r, r + kScanStep);
        r += kScanStep;
    }
    while (true) {
        if (r + kScanStep > kScanLimit) return out;
        if (!feasible(r + kScanStep)) break;
        r += kScanStep;
    }
    out.outer = refine(r, r + kScanStep);
    return out;
}

SubproblemSolution solve_subproblem(const Surrogate& surrogate, const SlotConstraints& constraints) {
    SubproblemSolution out;
    out.z = surrogate.expansion_point;
    const Eigen::Vector2d q1_fixed = constraints.move1 ? Eigen::Vector2d(surrogate.expansion_point.head<2>())
                                                       : constraints.speed1.center;
    const Eigen::Vector2d q2_fixed = constraints.move2 ? Eigen::Vector2d(surrogate.expansion_point.tail<2>())
                                                       : constraints.speed2.center;
    out.z = stack(q1_fixed, q2_fixed);
    if (!constraints.move1 && !constraints.move2) return out;

    // Free blocks occupy consecutive slots of the reduced variable.
    const int n = 2 * (static_cast<int>(constraints.move1) + static_cast<int>(constraints.move2));
    const int off1 = 0;
    const int off2 = constraints.move1 ? 2 : 0;
    auto selector = [&](int offset) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, n);
        s.block<2, 2>(0, offset).setIdentity();
        return s;
    };

    ConvexProgram program;
    program.objective = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd hint(n);
    LinearConstraint collision{Eigen::VectorXd::Zero(n), constraints.collision.offset};
    if (constraints.move1) {
        program.objective.segment<2>(off1) = surrogate.gradient.head<2>();
        hint.segment<2>(off1) = surrogate.expansion_point.head<2>();
        program.balls.push_back({selector(off1), constraints.speed1.center, constraints.speed1.radius});
        if (std::isfinite(constraints.snr.radius)) {
            program.balls.push_back({selector(off1), constraints.snr.center, constraints.snr.radius});
        }
        collision.normal.segment<2>(off1) = constraints.collision.normal.head<2>();
        if (constraints.snr_inner_active) {
            LinearConstraint inner{Eigen::VectorXd::Zero(n), constraints.snr_inner_offset};
            inner.normal.segment<2>(off1) = constraints.snr_inner_normal;
            program.halfspaces.push_back(inner);
        }
    } else {
        collision.offset -= constraints.collision.normal.head<2>().dot(q1_fixed);
    }
    if (constraints.move2) {
        program.objective.segment<2>(off2) = surrogate.gradient.tail<2>();
        hint.segment<2>(off2) = surrogate.expansion_point.tail<2>();
        program.balls.push_back({selector(off2), constraints.speed2.center, constraints.speed2.radius});
        collision.normal.segment<2>(off2) = constraints.collision.normal.tail<2>();
    } else {
        collision.offset -= constraints.collision.normal.tail<2>().dot(q2_fixed);
    }
    if (collision.normal.norm() > 0.0) {
        program.halfspaces.push_back(collision);
    }

    const BarrierResult res = solve_barrier(program, hint);
    out.kkt_residual = res.kkt_residual;
    out.newton_steps = res.newton_steps;
    Eigen::Vector2d q1 = q1_fixed;
    Eigen::Vector2d q2 = q2_fixed;
    if (constraints.move1) q1 = res.z.segment<2>(off1);
    if (constraints.move2) q2 = res.z.segment<2>(off2);
    out.z = stack(q1, q2);
    return out;
}

namespace {

double crb_or_inf(const JointPosition& z, const UavPose& q1, const UavPose& q2, const TargetState& target,
                  const SensingParams& params) {
    try {
        return predicted_crb(q1.with_position(z.head<2>()), q2.with_position(z.tail<2>()), target, params).crb;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::GeometrySingular) return std::numeric_limits<double>::infinity();
        throw;
    }
}

}  // namespace

ScaResult sca_step(const UavPose& prev_q1, const UavPose& prev_q2, const TargetState& predicted_target,
                   const Eigen::Matrix4d& m_pred, const PlannerSettings& settings) {
    ScaResult result;
    result.q1 = prev_q1;
    result.q2 = prev_q2;
    result.ball = error_radius(m_pred, settings.psi);
    const SnrInterval interval = (settings.move1 && settings.gamma_c > 0.0)
                                     ? snr_feasible_interval(prev_q1.height, result.ball, settings.gamma_c,
                                                             settings.channel)
                                     : SnrInterval{};
    result.snr_radius = interval.outer;
    result.snr_inner_radius = interval.inner;
    const Eigen::Vector2d u_hat = predicted_target.position();

    SlotConstraints cons;
    const double reach = settings.v_max * settings.dt;
    cons.speed1 = {prev_q1.q, reach};
    cons.speed2 = {prev_q2.q, reach};
    cons.snr = {predicted_target.position(), result.snr_radius};
    cons.move1 = settings.move1;
    cons.move2 = settings.move2;

    JointPosition z = stack(prev_q1.q, prev_q2.q);
    double f = predicted_crb(prev_q1, prev_q2, predicted_target, settings.sensing).crb;
    ScaTrace& trace = result.trace;
    trace.objective.push_back(f);
    trace.iterates.push_back(z);

    // A start outside the SNR annulus is restored by accepting the first solution outright.
    const double r_prev = (prev_q1.q - u_hat).norm();
    bool restoring = settings.move1 && (r_prev > interval.outer || r_prev < interval.inner);
    cons.snr_inner_active = settings.move1 && interval.inner > 0.0;

    for (int k = 1; k <= settings.k_max; ++k) {
        trace.iterations = k;
        const UavPose q1_k = prev_q1.with_position(z.head<2>());
        const UavPose q2_k = prev_q2.with_position(z.tail<2>());
        const Surrogate surrogate = linearize_crb(q1_k, q2_k, predicted_target, settings.sensing);
        cons.collision = linearize_collision(q1_k.q, q2_k.q, settings.d_min);
        if (cons.snr_inner_active) {
            // |q1 - u_hat| >= n^T (q1 - u_hat) for unit n, so the cut is an inner approximation.
            const Eigen::Vector2d offset = q1_k.q - u_hat;
            const double norm = offset.norm();
            cons.snr_inner_normal = norm > 1e-9 ? Eigen::Vector2d(offset / norm) : Eigen::Vector2d::UnitX();
            cons.snr_inner_offset = interval.inner + cons.snr_inner_normal.dot(u_hat);
        }
        JointPosition candidate = solve_subproblem(surrogate, cons).z;
        double f_candidate = crb_or_inf(candidate, prev_q1, prev_q2, predicted_target, settings.sensing);

        int halvings = 0;
        if (!restoring) {
            while (!(f_candidate < f) && halvings < settings.max_halvings) {
                candidate = z + 0.5 * (candidate - z);
                f_candidate = crb_or_inf(candidate, prev_q1, prev_q2, predicted_target, settings.sensing);
                ++halvings;
            }
            if (!(f_candidate < f)) {
                // No decrease reachable along the step: the accepted objective is stationary.
                trace.converged = true;
                break;
            }
        }
        if (restoring) {
            // The monotone sequence starts at the restored point.
            restoring = false;
            trace.restored_from = f;
            z = candidate;
            f = f_candidate;
            trace.objective.assign(1, f);
            trace.iterates.assign(1, z);
            continue;
        }

        const double change = std::abs(f - f_candidate);
        trace.step_norms.push_back((candidate - z).norm());
        trace.halvings.push_back(halvings);
        z = candidate;
        f = f_candidate;
        trace.objective.push_back(f);
        trace.iterates.push_back(z);
        if (change <= settings.eta * f) {
            trace.converged = true;
            break;
        }
    }
    result.q1 = prev_q1.with_position(z.head<2>());
    result.q2 = prev_q2.with_position(z.tail<2>());
    return result;
}

}  // namespace bisac
