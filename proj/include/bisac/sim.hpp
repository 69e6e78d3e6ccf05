#pragma once

#include "bisac/channel.hpp"
#include "bisac/ekf.hpp"
#include "bisac/model.hpp"
#include "bisac/sensing.hpp"
#include "bisac/trajopt.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bisac {

/// Scenario parameters in linear SI units.
struct ScenarioConfig {
    double horizon = 15.0;  // T, s
    double dt = 0.5;        // slot length, s

    ChannelParams channel;
    SensingParams sensing;
    MotionNoise motion{1.0, 1.0, 0.5, 0.5};

    Eigen::Vector2d target_start{100.0, 100.0};
    double target_speed = 10.0;
    double target_heading_deg = 45.0;

    Eigen::Vector2d q1_start{140.0, 100.0};
    Eigen::Vector2d q2_start{120.0, 200.0};
    double h1 = 50.0;
    double h2 = 50.0;
    double d_min = 40.0;
    double v_max = 20.0;

    double gamma_c = 0.0;  // linear SNR threshold; 0 means no communication requirement
    double psi = 0.0;
    double eta = 1e-3;
    int k_max = 20;

    Eigen::Vector4d initial_covariance{1.0, 1.0, 0.5, 0.5};
    double process_noise_scale = 1.0;
    double measurement_noise_scale = 1.0;
    int ekf_passes = 5;

    /// N = T / dt; throws InvalidConfig unless it is a positive integer.
    int slot_count() const;
    void validate() const;

    TargetState initial_target() const;
    SensingParams effective_sensing() const;
    MotionNoise effective_motion() const;
};

enum class Policy { Proposed, SemiDynamic, Static, NoComm };

std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view name);

struct PolicySpec {
    Policy policy = Policy::Proposed;
    /// Receiver position for the semi-dynamic baseline; defaults to the configured start.
    std::optional<Eigen::Vector2d> fixed_q2;
};

struct SlotLog {
    int n = 0;
    TargetState truth;
    EkfBelief predicted;
    EkfBelief belief;
    UavPose q1;
    UavPose q2;
    Measurement measurement;
    double pred_crb = 0.0;
    double crb_at_truth = 0.0;
    double snr_db = 0.0;     // realized with the true channel and the beamformer matched to the prediction
    double wc_snr_db = 0.0;  // worst case over the error ball
    double epsilon = 0.0;
    double snr_radius = 0.0;
    double snr_inner_radius = 0.0;
    int sca_iterations = 0;
    bool converged = false;
    bool snr_infeasible = false;
    ScaTrace trace;

    double position_error2() const { return (truth.position() - belief.x_hat.position()).squaredNorm(); }
};

struct EpisodeSummary {
    double position_rmse = 0.0;
    double mean_crb = 0.0;
    double max_crb = 0.0;
    double snr_satisfaction = 0.0;
    double mean_uav_distance = 0.0;
    double mean_uav1_target_distance = 0.0;
    int constraint_violations = 0;
    int snr_infeasible_slots = 0;
    double convergence_rate = 0.0;
};

struct EpisodeLog {
    ScenarioConfig config;
    PolicySpec policy;
    std::uint64_t seed = 0;
    UavPose q1_start;
    UavPose q2_start;
    std::vector<SlotLog> slots;
    EpisodeSummary summary;
};

/// Deterministic substream for (seed, slot, purpose).
Rng substream(std::uint64_t seed, int slot, std::uint64_t purpose);

PlannerSettings planner_settings(const ScenarioConfig& config, const PolicySpec& policy);

/// Runs slots 2..N: time update, per-slot placement, measurement, correction.
EpisodeLog run_episode(const ScenarioConfig& config, const PolicySpec& policy, std::uint64_t seed);

/// Runs the seeds independently (in parallel where available), in seed order.
std::vector<EpisodeLog> run_batch(const ScenarioConfig& config, const PolicySpec& policy,
                                  const std::vector<std::uint64_t>& seeds);

struct SweepEntry {
    std::string parameter;
    double value = 0.0;
    std::vector<EpisodeLog> episodes;
};

/// One batch per value. The parameter is any scalar config key (see config.hpp).
std::vector<SweepEntry> run_sweep(const ScenarioConfig& config, const PolicySpec& policy,
                                  const std::string& parameter, const std::vector<double>& values,
                                  const std::vector<std::uint64_t>& seeds);

EpisodeSummary summarize_episode(const EpisodeLog& episode);

struct PolicyAggregate {
    std::string label;
    int episodes = 0;
    int slots = 0;
    double position_rmse = 0.0;
    double mean_crb = 0.0;
    double max_crb = 0.0;
    double snr_satisfaction = 0.0;
    double mean_uav_distance = 0.0;
    double mean_uav1_target_distance = 0.0;
    int constraint_violations = 0;
    int snr_infeasible_slots = 0;
    double convergence_rate = 0.0;
};

/// Aggregates over all slots of all episodes, grouped by policy label.
std::vector<PolicyAggregate> summarize(const std::vector<EpisodeLog>& episodes);

std::string policy_label(const PolicySpec& policy);

/// Monte Carlo estimate of psi from (prediction, truth) channel pairs gathered on episodes of
/// `policy` (communication requirement off).
double calibrate_psi(const ScenarioConfig& config, int trials, double coverage, std::uint64_t seed,
                     Policy policy = Policy::NoComm);

std::vector<PsiSample> collect_psi_samples(const ScenarioConfig& config, int trials, std::uint64_t seed,
                                           Policy policy = Policy::NoComm);

}  // namespace bisac
