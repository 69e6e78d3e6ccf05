// Command-line front end: run, baseline, sweep, calibrate-psi, replay.

#include "bisac/artifacts.hpp"
#include "bisac/config.hpp"
#include "bisac/errors.hpp"
#include "bisac/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using namespace bisac;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "bad seed '" + s + "'");
        }
    };
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t lo = number(text.substr(0, dots));
        const std::uint64_t hi = number(text.substr(dots + 2));
        if (hi < lo) throw Error(ErrorCode::ConfigError, "empty seed range " + text);
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        seeds.push_back(number(text.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return seeds;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    if (text.empty()) return values;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        const std::string item = text.substr(start, comma - start);
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "bad value '" + item + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

Eigen::Vector2d parse_point(const std::string& text) {
    const std::vector<double> v = parse_values(text);
    if (v.size() != 2) throw Error(ErrorCode::ConfigError, "--fixed-q2 expects X,Y");
    return {v[0], v[1]};
}

std::string value_tag(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void check_strict(const std::vector<EpisodeLog>& episodes) {
    for (const auto& e : episodes) {
        for (const auto& s : e.slots) {
            if (s.snr_infeasible) {
                throw Error(ErrorCode::SnrInfeasible, "seed " + std::to_string(e.seed) + " slot " +
                                                          std::to_string(s.n) + " missed the SNR requirement");
            }
        }
    }
}

// Writes one batch (single episode directly into dir, several into seed_<s>/ subdirectories).
void write_batch(const fs::path& dir, const RunManifest& manifest, const std::vector<EpisodeLog>& episodes,
                 bool svg) {
    fs::create_directories(dir);
    if (episodes.size() == 1) {
        write_episode_artifacts(dir, episodes.front(), svg);
    } else {
        for (const auto& e : episodes) {
            RunManifest single = manifest;
            single.seeds = {e.seed};
            const fs::path sub = dir / ("seed_" + std::to_string(e.seed));
            single.out_dir = (fs::path(manifest.out_dir) / sub.filename()).string();
            write_episode_artifacts(sub, e, svg);
            write_manifest(sub, single);
        }
        write_text(dir / "summary.csv", episode_summary_csv(episodes));
        write_text(dir / "aggregate.csv", aggregate_summary_csv(summarize(episodes)));
    }
    write_manifest(dir, manifest);
}

// Produces every artifact of `manifest` under `staging`.
void execute(const RunManifest& manifest, const fs::path& staging, bool svg) {
    if (manifest.command == "calibrate-psi") {
        throw Error(ErrorCode::ConfigError, "calibration manifests are not replayable");
    }
    if (manifest.parameter) {
        const auto entries =
            run_sweep(manifest.config, manifest.policy, *manifest.parameter, manifest.values, manifest.seeds);
        for (const auto& entry : entries) {
            if (manifest.strict) check_strict(entry.episodes);
            RunManifest sub = manifest;
            sub.command = "run";
            sub.parameter.reset();
            sub.values.clear();
            sub.config = with_parameter(manifest.config, entry.parameter, entry.value);
            sub.config_hash = config_hash_hex(sub.config);
            const std::string name = entry.parameter + "_" + value_tag(entry.value);
            sub.out_dir = (fs::path(manifest.out_dir) / name).string();
            write_batch(staging / name, sub, entry.episodes, svg);
        }
        write_manifest(staging, manifest);
        return;
    }
    const std::vector<EpisodeLog> episodes = run_batch(manifest.config, manifest.policy, manifest.seeds);
    if (manifest.strict) check_strict(episodes);
    write_batch(staging, manifest, episodes, svg);
}

// Builds into a sibling staging directory and moves the results into `out` only on success.
void publish(const fs::path& out, const std::function<void(const fs::path&)>& build) {
    const fs::path target = fs::absolute(out).lexically_normal();
    const fs::path staging =
        target.parent_path() / ("." + target.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(staging);
    try {
        fs::create_directories(staging);
        build(staging);
        fs::create_directories(target);
        for (const auto& entry : fs::directory_iterator(staging)) {
            const fs::path dest = target / entry.path().filename();
            fs::remove_all(dest);
            fs::rename(entry.path(), dest);
        }
        fs::remove_all(staging);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

struct CommonArgs {
    std::string config;
    std::string seed;
    std::string seeds;
    std::string out;
    std::string policy;
    std::string fixed_q2;
    bool strict = false;
    bool no_svg = false;
};

RunManifest build_manifest(const std::string& command, const CommonArgs& a, Policy default_policy,
                           const std::string& default_seeds) {
    RunManifest m;
    m.command = command;
    m.config_path = a.config;
    m.config = a.config.empty() ? default_config() : parse_config(a.config);
    m.config_hash = config_hash_hex(m.config);
    if (!a.seed.empty() && !a.seeds.empty()) {
        throw Error(ErrorCode::ConfigError, "give either --seed or --seeds");
    }
    m.seeds = parse_seeds(!a.seed.empty() ? a.seed : (!a.seeds.empty() ? a.seeds : default_seeds));
    m.out_dir = a.out;
    m.policy.policy = a.policy.empty() ? default_policy : parse_policy(a.policy);
    if (!a.fixed_q2.empty()) {
        if (m.policy.policy != Policy::SemiDynamic) {
            throw Error(ErrorCode::ConfigError, "--fixed-q2 applies to the semi-dynamic policy only");
        }
        m.policy.fixed_q2 = parse_point(a.fixed_q2);
    }
    m.strict = a.strict;
    return m;
}

void add_common(CLI::App* cmd, CommonArgs& a, bool with_policy) {
    cmd->add_option("--config", a.config, "Scenario JSON (defaults to the built-in scenario)");
    cmd->add_option("--seed", a.seed, "Single seed");
    cmd->add_option("--seeds", a.seeds, "Seed range N..M or list N,M,...");
    cmd->add_option("--out", a.out, "Output directory")->required();
    if (with_policy) {
        cmd->add_option("--policy", a.policy, "proposed | semi-dynamic | static | no-comm");
        cmd->add_option("--fixed-q2", a.fixed_q2, "Receiver position X,Y for semi-dynamic");
    }
    cmd->add_flag("--strict", a.strict, "Fail when any slot misses the SNR requirement");
    cmd->add_flag("--no-svg", a.no_svg, "Skip SVG plots");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bistatic UAV sensing and communication simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonArgs run_args;
    auto* run = app.add_subcommand("run", "Run episodes for one policy");
    add_common(run, run_args, true);

    CommonArgs base_args;
    auto* baseline = app.add_subcommand("baseline", "Run a baseline policy (default semi-dynamic)");
    add_common(baseline, base_args, true);

    CommonArgs sweep_args;
    std::string param;
    std::string values;
    auto* sweep = app.add_subcommand("sweep", "Run one batch per parameter value");
    add_common(sweep, sweep_args, true);
    sweep->add_option("--param", param, "Scalar config key, e.g. P_t_dBm or gamma_c")->required();
    sweep->add_option("--values", values, "Comma-separated values in config units")->required();

    std::string cal_config;
    std::string cal_out;
    int trials = 10000;
    double coverage = 0.95;
    std::uint64_t cal_seed = 1;
    auto* calibrate = app.add_subcommand("calibrate-psi", "Estimate the channel-error scale psi");
    calibrate->add_option("--config", cal_config, "Scenario JSON");
    calibrate->add_option("--trials", trials, "Number of (prediction, truth) samples");
    calibrate->add_option("--coverage", coverage, "Target coverage probability");
    calibrate->add_option("--seed", cal_seed, "First episode seed");
    calibrate->add_option("--out", cal_out, "Directory for psi.json and manifest.json");

    std::string manifest_path;
    std::string replay_out;
    bool replay_no_svg = false;
    auto* replay = app.add_subcommand("replay", "Re-run a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json to reproduce")->required();
    replay->add_option("--out", replay_out, "Output directory (defaults to the manifest's)");
    replay->add_flag("--no-svg", replay_no_svg, "Skip SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run || *baseline || *sweep) {
            RunManifest m;
            bool svg = true;
            if (*run) {
                m = build_manifest("run", run_args, Policy::Proposed, "1");
                svg = !run_args.no_svg;
            } else if (*baseline) {
                m = build_manifest("baseline", base_args, Policy::SemiDynamic, "1..20");
                if (m.policy.policy == Policy::Proposed) {
                    throw Error(ErrorCode::ConfigError, "baseline needs a non-proposed --policy");
                }
                svg = !base_args.no_svg;
            } else {
                m = build_manifest("sweep", sweep_args, Policy::Proposed, "1..20");
                m.parameter = canonical_key(param);
                m.values = parse_values(values);
                const auto keys = scalar_keys();
                if (std::find(keys.begin(), keys.end(), *m.parameter) == keys.end()) {
                    throw Error(ErrorCode::InvalidConfig, "unknown sweep parameter '" + param + "'");
                }
                svg = !sweep_args.no_svg;
            }
            publish(m.out_dir, [&](const fs::path& staging) { execute(m, staging, svg); });
            std::cout << "wrote " << m.out_dir << "\n";
        } else if (*replay) {
            RunManifest m = read_manifest(manifest_path);
            if (!replay_out.empty()) m.out_dir = replay_out;
            if (m.out_dir.empty()) throw Error(ErrorCode::ConfigError, "manifest has no output directory");
            publish(m.out_dir, [&](const fs::path& staging) { execute(m, staging, !replay_no_svg); });
            std::cout << "wrote " << m.out_dir << "\n";
        } else if (*calibrate) {
            ScenarioConfig config = cal_config.empty() ? default_config() : parse_config(cal_config);
            const double psi = calibrate_psi(config, trials, coverage, cal_seed);
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", psi);
            std::cout << "psi = " << buf << "\n";
            if (!cal_out.empty()) {
                publish(cal_out, [&](const fs::path& staging) {
                    nlohmann::json j{{"psi", psi}, {"trials", trials}, {"coverage", coverage}, {"seed", cal_seed}};
                    write_text(staging / "psi.json", j.dump(2) + "\n");
                    RunManifest m;
                    m.command = "calibrate-psi";
                    m.config_path = cal_config;
                    m.config = config;
                    m.config_hash = config_hash_hex(config);
                    m.seeds = {cal_seed};
                    m.out_dir = cal_out;
                    m.policy.policy = Policy::NoComm;
                    write_manifest(staging, m);
                });
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const bool config = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidConfig;
        return config ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
