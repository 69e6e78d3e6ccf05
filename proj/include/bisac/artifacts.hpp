#pragma once

#include "bisac/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bisac {

inline constexpr const char* kToolVersion = "0.1.0";

/// %.17g, so a parse returns the same double.
std::string format_double(double x);

std::string slots_csv(const EpisodeLog& episode);
/// One row per SCA iterate: n,k,objective,step_norm,halvings,q1x,q1y,q2x,q2y.
std::string trace_csv(const EpisodeLog& episode);
/// One row per episode, labelled by policy and seed.
std::string episode_summary_csv(const std::vector<EpisodeLog>& episodes);
/// One row per policy label, aggregated over the episodes.
std::string aggregate_summary_csv(const std::vector<PolicyAggregate>& rows);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal polyline chart; non-finite points are skipped.
std::string polyline_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const std::vector<Series>& series);

/// slots.csv, trace.csv, summary.csv and, when `svg` is set, crb.svg, trajectory.svg, trace.svg.
void write_episode_artifacts(const std::filesystem::path& dir, const EpisodeLog& episode, bool svg);

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_hash;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    std::string version = kToolVersion;
    ScenarioConfig config;
    PolicySpec policy;
    std::optional<std::string> parameter;
    std::vector<double> values;
    bool strict = false;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace bisac
