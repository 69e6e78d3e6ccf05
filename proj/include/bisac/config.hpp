#pragma once

#include "bisac/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bisac {

/// Scenario defaults, including the calibrated psi.
ScenarioConfig default_config();

/// Reads a JSON scenario. Powers are in dB/dBm, everything else in SI units.
/// Throws Error(ConfigError) naming the offending field.
ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig config_from_json(const nlohmann::json& j);

/// Inverse of config_from_json, with every key spelled out.
nlohmann::json config_to_json(const ScenarioConfig& config);

/// Resolves an alias such as "gamma_c" to its file key ("gamma_c_dB").
std::string canonical_key(std::string_view key);

/// Scalar keys accepted by with_parameter, in file units.
std::vector<std::string> scalar_keys();

/// Copy of `config` with one scalar key set (file units; e.g. gamma_c_dB = 20).
ScenarioConfig with_parameter(const ScenarioConfig& config, std::string_view key, double value);

/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const ScenarioConfig& config);
std::string config_hash_hex(const ScenarioConfig& config);

}  // namespace bisac
