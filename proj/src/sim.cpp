#include "bisac/sim.hpp"

#include "bisac/config.hpp"
#include "bisac/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <thread>

namespace bisac {

namespace {

enum Purpose : std::uint64_t {
    kInitialBelief = 1,
    kProcessNoise = 2,
    kMeasurementNoise = 3,
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

int ScenarioConfig::slot_count() const {
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "T and delta_T must be positive");
    }
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw Error(ErrorCode::InvalidConfig, "T / delta_T must be a positive integer");
    }
    return static_cast<int>(rounded);
}

void ScenarioConfig::validate() const {
    slot_count();
    channel.validate();
    sensing.validate();
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(motion.sigma2_x >= 0.0 && motion.sigma2_y >= 0.0 && motion.sigma2_vx >= 0.0 && motion.sigma2_vy >= 0.0)) {
        fail("motion noise variances must be nonnegative");
    }
    if (!(h1 > 0.0 && h2 > 0.0)) fail("UAV heights must be positive");
    if (!(d_min >= 0.0)) fail("d_min must be nonnegative");
    if (!(v_max > 0.0)) fail("V_max must be positive");
    if (!(gamma_c >= 0.0)) fail("gamma_c must be nonnegative");
    if (!(psi >= 0.0)) fail("psi must be nonnegative");
    if (!(eta > 0.0)) fail("eta must be positive");
    if (k_max < 1) fail("k_max must be at least 1");
    if (!(initial_covariance.minCoeff() >= 0.0)) fail("initial covariance must be nonnegative");
    if (!(process_noise_scale >= 0.0 && measurement_noise_scale >= 0.0)) fail("noise scales must be nonnegative");
    if (ekf_passes < 1) fail("ekf_passes must be at least 1");
}

TargetState ScenarioConfig::initial_target() const {
    const double heading = target_heading_deg * std::numbers::pi / 180.0;
    return {target_start.x(), target_start.y(), target_speed * std::cos(heading), target_speed * std::sin(heading)};
}

SensingParams ScenarioConfig::effective_sensing() const {
    SensingParams s = sensing;
    s.noise_scale = sensing.noise_scale * measurement_noise_scale;
    return s;
}

MotionNoise ScenarioConfig::effective_motion() const { return motion.scaled(process_noise_scale); }

std::string_view to_string(Policy policy) {
    switch (policy) {
        case Policy::Proposed: return "proposed";
        case Policy::SemiDynamic: return "semi-dynamic";
        case Policy::Static: return "static";
        case Policy::NoComm: return "no-comm";
    }
    return "unknown";
}

Policy parse_policy(std::string_view name) {
    if (name == "proposed") return Policy::Proposed;
    if (name == "semi-dynamic" || name == "semi_dynamic") return Policy::SemiDynamic;
    if (name == "static") return Policy::Static;
    if (name == "no-comm" || name == "no_comm") return Policy::NoComm;
    throw Error(ErrorCode::InvalidConfig, "unknown policy '" + std::string(name) + "'");
}

std::string policy_label(const PolicySpec& policy) {
    std::string label(to_string(policy.policy));
    if (policy.policy == Policy::SemiDynamic && policy.fixed_q2) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "@%g,%g", policy.fixed_q2->x(), policy.fixed_q2->y());
        label += buf;
    }
    return label;
}

Rng substream(std::uint64_t seed, int slot, std::uint64_t purpose) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(slot));
    h = splitmix64(h ^ (purpose * 0xd1b54a32d192ed03ULL));
    return Rng(h);
}

PlannerSettings planner_settings(const ScenarioConfig& config, const PolicySpec& policy) {
    PlannerSettings p;
    p.sensing = config.effective_sensing();
    p.channel = config.channel;
    p.v_max = config.v_max;
    p.dt = config.dt;
    p.d_min = config.d_min;
    p.gamma_c = policy.policy == Policy::NoComm ? 0.0 : config.gamma_c;
    p.psi = config.psi;
    p.eta = config.eta;
    p.k_max = config.k_max;
    p.move1 = policy.policy != Policy::Static;
    p.move2 = policy.policy == Policy::Proposed || policy.policy == Policy::NoComm;
    return p;
}

namespace {

double to_db_or_floor(double linear) {
    return linear > 0.0 ? linear_to_db(linear) : -std::numeric_limits<double>::infinity();
}

// Moves UAV-1 toward the nearest offset in [inner, outer] from the predicted target as far as speed
// and separation allow; UAV-2 holds.
std::pair<UavPose, UavPose> approach_annulus(const UavPose& q1, const UavPose& q2, const TargetState& predicted,
                                             const SnrInterval& interval, const PlannerSettings& settings) {
    const Eigen::Vector2d u_hat = predicted.position();
    const Eigen::Vector2d offset = q1.q - u_hat;
    const double r = offset.norm();
    const Eigen::Vector2d dir = r > 1e-9 ? Eigen::Vector2d(offset / r) : Eigen::Vector2d::UnitX();
    const Eigen::Vector2d goal = u_hat + std::clamp(r, interval.inner, interval.outer) * dir;
    if ((goal - q1.q).norm() == 0.0) return {q1, q2};
    Surrogate pull;
    pull.gradient << (q1.q - goal).normalized(), 0.0, 0.0;
    pull.expansion_point = stack(q1.q, q2.q);
    SlotConstraints cons;
    cons.speed1 = {q1.q, settings.v_max * settings.dt};
    cons.speed2 = {q2.q, settings.v_max * settings.dt};
    cons.collision = linearize_collision(q1.q, q2.q, settings.d_min);
    cons.snr = {u_hat, std::numeric_limits<double>::infinity()};
    cons.move1 = true;
    cons.move2 = false;
    JointPosition z = solve_subproblem(pull, cons).z;
    // Do not overshoot the goal along the pull direction.
    if ((z.head<2>() - q1.q).norm() > (goal - q1.q).norm()) z.head<2>() = goal;
    if (!check_separation(q1.with_position(z.head<2>()), q2, settings.d_min)) return {q1, q2};
    return {q1.with_position(z.head<2>()), q2};
}

}  // namespace

EpisodeLog run_episode(const ScenarioConfig& config, const PolicySpec& policy, std::uint64_t seed) {
    config.validate();
    const int n_slots = config.slot_count();
    const PlannerSettings planner = planner_settings(config, policy);
    const SensingParams sensing = config.effective_sensing();
    const MotionNoise motion = config.effective_motion();
    const Eigen::Matrix4d q = motion.covariance();
    const TransitionMatrix g(config.dt);

    EpisodeLog log;
    log.config = config;
    log.policy = policy;
    log.seed = seed;

    TargetState truth = config.initial_target();
    EkfBelief belief;
    {
        Rng rng = substream(seed, 1, kInitialBelief);
        std::normal_distribution<double> unit(0.0, 1.0);
        Eigen::Vector4d x = truth.vec();
        const Eigen::Vector4d var = q.diagonal();
        for (int i = 0; i < 4; ++i) {
            const double z = unit(rng);
            x(i) += std::sqrt(var(i)) * z;
        }
        belief.x_hat = TargetState::from_vec(x);
        belief.m = config.initial_covariance.asDiagonal();
    }

    UavPose q1{config.q1_start, config.h1};
    UavPose q2{config.q2_start, config.h2};
    if (policy.policy == Policy::SemiDynamic && policy.fixed_q2) q2.q = *policy.fixed_q2;
    log.q1_start = q1;
    log.q2_start = q2;

    log.slots.reserve(static_cast<std::size_t>(std::max(0, n_slots - 1)));
    for (int n = 2; n <= n_slots; ++n) {
        SlotLog slot;
        slot.n = n;
        {
            Rng rng = substream(seed, n, kProcessNoise);
            truth = propagate_target(truth, config.dt, motion, rng);
        }
        const EkfBelief predicted = time_update(belief, g, q);

        if (planner.move1 || planner.move2) {
            try {
                ScaResult planned = sca_step(q1, q2, predicted.x_hat, predicted.m, planner);
                q1 = planned.q1;
                q2 = planned.q2;
                slot.snr_radius = planned.snr_radius;
                slot.snr_inner_radius = planned.snr_inner_radius;
                slot.trace = std::move(planned.trace);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::SnrInfeasible) {
                    // No offset meets the target: hold, which is the closest pose to the previous one.
                    slot.snr_infeasible = true;
                    slot.snr_radius = 0.0;
                } else if (e.code() == ErrorCode::SubproblemInfeasible) {
                    slot.snr_infeasible = true;
                    const SnrInterval interval = snr_feasible_interval(
                        q1.height, error_radius(predicted.m, planner.psi), planner.gamma_c, planner.channel);
                    slot.snr_radius = interval.outer;
                    slot.snr_inner_radius = interval.inner;
                    std::tie(q1, q2) = approach_annulus(q1, q2, predicted.x_hat, interval, planner);
                } else {
                    throw;
                }
                const double f = predicted_crb(q1, q2, predicted.x_hat, sensing).crb;
                slot.trace = ScaTrace{};
                slot.trace.objective = {f};
                slot.trace.iterates = {stack(q1.q, q2.q)};
            }
        } else {
            slot.snr_radius = std::numeric_limits<double>::infinity();
            slot.trace.objective = {predicted_crb(q1, q2, predicted.x_hat, sensing).crb};
            slot.trace.iterates = {stack(q1.q, q2.q)};
            slot.trace.converged = true;
        }

        Rng meas_rng = substream(seed, n, kMeasurementNoise);
        const auto [y, r] = generate_measurement(q1, q2, truth, sensing, meas_rng);
        belief = correct(predicted, q1, q2, y, r, sensing, config.ekf_passes);

        const ChannelVector h_true = channel_vector(q1, truth, config.channel);
        const ChannelVector h_hat = predicted_channel(q1, predicted.x_hat, config.channel);
        const ErrorBall ball = error_radius(predicted.m, config.psi);

        slot.truth = truth;
        slot.predicted = predicted;
        slot.belief = belief;
        slot.q1 = q1;
        slot.q2 = q2;
        slot.measurement = y;
        slot.pred_crb = predicted_crb(q1, q2, predicted.x_hat, sensing).crb;
        slot.crb_at_truth = crb(q1, q2, truth, sensing).crb;
        slot.snr_db = to_db_or_floor(snr(h_true, matched_beamformer(h_hat), config.channel));
        slot.wc_snr_db = to_db_or_floor(worst_case_snr(h_hat, ball, config.channel));
        slot.epsilon = ball.epsilon;
        slot.sca_iterations = slot.trace.iterations;
        slot.converged = slot.trace.converged;
        log.slots.push_back(std::move(slot));
    }
    log.summary = summarize_episode(log);
    return log;
}

std::vector<EpisodeLog> run_batch(const ScenarioConfig& config, const PolicySpec& policy,
                                  const std::vector<std::uint64_t>& seeds) {
    std::vector<EpisodeLog> out(seeds.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(seeds.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = run_episode(config, policy, seeds[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < seeds.size(); i = next++) {
                try {
                    out[i] = run_episode(config, policy, seeds[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<SweepEntry> run_sweep(const ScenarioConfig& config, const PolicySpec& policy,
                                  const std::string& parameter, const std::vector<double>& values,
                                  const std::vector<std::uint64_t>& seeds) {
    const std::string key = canonical_key(parameter);
    std::vector<SweepEntry> out;
    out.reserve(values.size());
    for (double v : values) {
        out.push_back({key, v, run_batch(with_parameter(config, key, v), policy, seeds)});
    }
    return out;
}

namespace {

bool robust_snr_met(const SlotLog& s, const ScenarioConfig& config) {
    if (config.gamma_c <= 0.0 || s.snr_infeasible) return true;
    return db_to_linear(s.wc_snr_db) >= config.gamma_c * (1.0 - 1e-9);
}

}  // namespace

EpisodeSummary summarize_episode(const EpisodeLog& episode) {
    EpisodeSummary s;
    const auto& slots = episode.slots;
    if (slots.empty()) return s;
    const PlannerSettings planner = planner_settings(episode.config, episode.policy);
    const double count = static_cast<double>(slots.size());
    double err2 = 0.0;
    double crb_sum = 0.0;
    int snr_ok = 0;
    double d12 = 0.0;
    double d1t = 0.0;
    int converged = 0;
    UavPose prev1 = episode.q1_start;
    UavPose prev2 = episode.q2_start;
    for (const auto& slot : slots) {
        err2 += slot.position_error2();
        crb_sum += slot.crb_at_truth;
        s.max_crb = std::max(s.max_crb, slot.crb_at_truth);
        const double gamma = planner.gamma_c;
        if (gamma <= 0.0 || db_to_linear(slot.snr_db) >= gamma) ++snr_ok;
        d12 += (slot.q1.q - slot.q2.q).norm();
        d1t += horizontal_distance(slot.q1, slot.truth);
        if (slot.converged) ++converged;
        if (slot.snr_infeasible) ++s.snr_infeasible_slots;

        const double dt = episode.config.dt;
        const double vmax = episode.config.v_max;
        const bool speed_ok = check_speed(prev1, slot.q1, vmax, dt) && check_speed(prev2, slot.q2, vmax, dt);
        const bool separation_ok = check_separation(slot.q1, slot.q2, episode.config.d_min);
        ScenarioConfig effective = episode.config;
        effective.gamma_c = gamma;
        const bool snr_ok_robust = !planner.move1 || robust_snr_met(slot, effective);
        if (!speed_ok || !separation_ok || !snr_ok_robust) ++s.constraint_violations;
        prev1 = slot.q1;
        prev2 = slot.q2;
    }
    s.position_rmse = std::sqrt(err2 / count);
    s.mean_crb = crb_sum / count;
    s.snr_satisfaction = snr_ok / count;
    s.mean_uav_distance = d12 / count;
    s.mean_uav1_target_distance = d1t / count;
    s.convergence_rate = converged / count;
    return s;
}

std::vector<PolicyAggregate> summarize(const std::vector<EpisodeLog>& episodes) {
    if (episodes.empty()) {
        throw Error(ErrorCode::InvalidInput, "summarize needs at least one episode");
    }
    std::map<std::string, std::vector<const EpisodeLog*>> groups;
    std::vector<std::string> order;
    for (const auto& e : episodes) {
        const std::string label = policy_label(e.policy);
        if (!groups.contains(label)) order.push_back(label);
        groups[label].push_back(&e);
    }
    std::vector<PolicyAggregate> out;
    for (const auto& label : order) {
        PolicyAggregate a;
        a.label = label;
        double err2 = 0.0;
        double crb_sum = 0.0;
        double snr_ok = 0.0;
        double d12 = 0.0;
        double d1t = 0.0;
        double converged = 0.0;
        for (const EpisodeLog* e : groups[label]) {
            ++a.episodes;
            const double n = static_cast<double>(e->slots.size());
            a.slots += static_cast<int>(e->slots.size());
            err2 += e->summary.position_rmse * e->summary.position_rmse * n;
            crb_sum += e->summary.mean_crb * n;
            a.max_crb = std::max(a.max_crb, e->summary.max_crb);
            snr_ok += e->summary.snr_satisfaction * n;
            d12 += e->summary.mean_uav_distance * n;
            d1t += e->summary.mean_uav1_target_distance * n;
            converged += e->summary.convergence_rate * n;
            a.constraint_violations += e->summary.constraint_violations;
            a.snr_infeasible_slots += e->summary.snr_infeasible_slots;
        }
        const double n = std::max(1, a.slots);
        a.position_rmse = std::sqrt(err2 / n);
        a.mean_crb = crb_sum / n;
        a.snr_satisfaction = snr_ok / n;
        a.mean_uav_distance = d12 / n;
        a.mean_uav1_target_distance = d1t / n;
        a.convergence_rate = converged / n;
        out.push_back(a);
    }
    return out;
}

std::vector<PsiSample> collect_psi_samples(const ScenarioConfig& config, int trials, std::uint64_t seed,
                                           Policy policy) {
    if (trials < 1) {
        throw Error(ErrorCode::InvalidInput, "trials must be positive");
    }
    std::vector<PsiSample> samples;
    samples.reserve(static_cast<std::size_t>(trials));
    const PolicySpec spec{policy, std::nullopt};
    for (std::uint64_t episode = 0; static_cast<int>(samples.size()) < trials; ++episode) {
        const EpisodeLog log = run_episode(config, spec, seed + episode);
        if (log.slots.empty()) {
            throw Error(ErrorCode::CalibrationDegenerate, "scenario has no slots to sample");
        }
        for (const auto& slot : log.slots) {
            if (static_cast<int>(samples.size()) >= trials) break;
            const ChannelVector h_true = channel_vector(slot.q1, slot.truth, config.channel);
            const ChannelVector h_hat = predicted_channel(slot.q1, slot.predicted.x_hat, config.channel);
            samples.push_back({(h_true - h_hat).norm(), slot.predicted.m.norm()});
        }
    }
    return samples;
}

double calibrate_psi(const ScenarioConfig& config, int trials, double coverage, std::uint64_t seed,
                     Policy policy) {
    if (trials < 1000) {
        throw Error(ErrorCode::InvalidInput, "psi calibration needs at least 1000 trials");
    }
    const std::vector<PsiSample> samples = collect_psi_samples(config, trials, seed, policy);
    return calibrate_psi_from_samples(samples, coverage);
}

}  // namespace bisac
