#include <gtest/gtest.h>

#include "bisac/artifacts.hpp"
#include "bisac/config.hpp"
#include "bisac/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace bisac;
namespace fs = std::filesystem;

namespace {

const fs::path kDefaultConfig = fs::path(BISAC_SOURCE_DIR) / "configs" / "default_s4.json";

nlohmann::json default_json() {
    std::ifstream in(kDefaultConfig);
    return nlohmann::json::parse(in);
}

ErrorCode code_of(const nlohmann::json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "config accepted";
    return ErrorCode::InvalidInput;
}

std::string message_of(const nlohmann::json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bisac_config_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(ParseConfig, ShippedDefaultsMatchScenarioParameters) {
    const ScenarioConfig c = parse_config(kDefaultConfig);
    EXPECT_EQ(c.slot_count(), 30);
    EXPECT_DOUBLE_EQ(c.horizon, 15.0);
    EXPECT_DOUBLE_EQ(c.dt, 0.5);
    EXPECT_DOUBLE_EQ(c.channel.e1, 25.0);
    EXPECT_DOUBLE_EQ(c.channel.e2, 0.112);
    EXPECT_DOUBLE_EQ(c.channel.beta0, 1e-6);
    EXPECT_NEAR(c.channel.sigma2_c, 1e-14, 1e-28);
    EXPECT_NEAR(c.sensing.sigma2_r, 1e-14, 1e-28);
    EXPECT_DOUBLE_EQ(c.channel.p_t, 10.0);
    EXPECT_DOUBLE_EQ(c.sensing.p_t, 10.0);
    EXPECT_EQ(c.channel.n_t, 16);
    EXPECT_EQ(c.sensing.n_t, 16);
    EXPECT_EQ(c.sensing.n_r, 16);
    EXPECT_DOUBLE_EQ(c.motion.sigma2_x, 1.0);
    EXPECT_DOUBLE_EQ(c.motion.sigma2_y, 1.0);
    EXPECT_DOUBLE_EQ(c.motion.sigma2_vx, 0.5);
    EXPECT_DOUBLE_EQ(c.motion.sigma2_vy, 0.5);
    EXPECT_DOUBLE_EQ(c.sensing.a_tau, 1.2e-7);
    EXPECT_DOUBLE_EQ(c.sensing.g_mf, 10.0);
    EXPECT_EQ(c.target_start, Eigen::Vector2d(100, 100));
    EXPECT_DOUBLE_EQ(c.target_speed, 10.0);
    EXPECT_EQ(c.q1_start, Eigen::Vector2d(140, 100));
    EXPECT_EQ(c.q2_start, Eigen::Vector2d(120, 200));
    EXPECT_DOUBLE_EQ(c.h1, 50.0);
    EXPECT_DOUBLE_EQ(c.h2, 50.0);
    EXPECT_DOUBLE_EQ(c.d_min, 40.0);
    EXPECT_DOUBLE_EQ(c.v_max, 20.0);
    EXPECT_NEAR(c.gamma_c, std::pow(10.0, 2.5), 1e-9);
    EXPECT_GT(c.psi, 0.0);
}

TEST(ParseConfig, ShippedFileEqualsBuiltInDefaults) {
    EXPECT_EQ(config_hash(parse_config(kDefaultConfig)), config_hash(default_config()));
}

TEST(ParseConfig, EmptyFileRejected) {
    const fs::path p = scratch("empty.json");
    write_text(p, "");
    try {
        parse_config(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(ParseConfig, MissingFileRejected) {
    EXPECT_THROW(parse_config(scratch("does_not_exist.json")), Error);
}

TEST(ParseConfig, TransmitPowerInDbm) {
    nlohmann::json j = default_json();
    j["P_t_dBm"] = 40;
    EXPECT_DOUBLE_EQ(config_from_json(j).channel.p_t, 10.0);
    j["P_t_dBm"] = 30;
    EXPECT_DOUBLE_EQ(config_from_json(j).sensing.p_t, 1.0);
}

TEST(ParseConfig, MissingFieldIsNamed) {
    nlohmann::json j = default_json();
    j.erase("V_max");
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
    EXPECT_NE(message_of(j).find("V_max"), std::string::npos);
}

TEST(ParseConfig, IllTypedFieldIsNamed) {
    nlohmann::json j = default_json();
    j["N_t"] = "sixteen";
    EXPECT_NE(message_of(j).find("N_t"), std::string::npos);
    j = default_json();
    j["N_t"] = 16.5;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
    j = default_json();
    j["u1"] = nlohmann::json::array({1});
    EXPECT_NE(message_of(j).find("u1"), std::string::npos);
}

TEST(ParseConfig, UnknownKeyIsNamed) {
    nlohmann::json j = default_json();
    j["P_tx"] = 40;
    EXPECT_NE(message_of(j).find("P_tx"), std::string::npos);
}

TEST(ParseConfig, CommentKeysIgnored) {
    nlohmann::json j = default_json();
    j["_note"] = "anything";
    EXPECT_NO_THROW(config_from_json(j));
}

TEST(ParseConfig, NonIntegerSlotCount) {
    nlohmann::json j = default_json();
    j["delta_T"] = 0.7;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
    j["delta_T"] = 0;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
}

TEST(ParseConfig, AliasesAccepted) {
    nlohmann::json j = default_json();
    j.erase("gamma_c_dB");
    j["gamma_c"] = 20;
    EXPECT_NEAR(config_from_json(j).gamma_c, 100.0, 1e-12);
    j["gamma_c_dB"] = 20;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);  // same key twice
}

TEST(ParseConfig, ZeroThresholdDropsRequirement) {
    nlohmann::json j = default_json();
    j["gamma_c_dB"] = 0;
    EXPECT_EQ(config_from_json(j).gamma_c, 0.0);
}

TEST(ParseConfig, SemanticValidation) {
    nlohmann::json j = default_json();
    j["V_max"] = -1;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
    j = default_json();
    j["kappa_nlos"] = 2;
    EXPECT_EQ(code_of(j), ErrorCode::ConfigError);
}

TEST(ConfigJson, RoundTripIsExact) {
    ScenarioConfig c = default_config();
    c.gamma_c = std::pow(10.0, 2.13);
    c.channel.p_t = dbm_to_watts(38.63);
    c.sensing.p_t = c.channel.p_t;
    c.sensing.sigma2_r = dbm_to_watts(-107.1);
    c.psi = 1.234567890123e-7;
    const ScenarioConfig back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
    EXPECT_EQ(back.gamma_c, c.gamma_c);
    EXPECT_EQ(back.channel.p_t, c.channel.p_t);
    EXPECT_EQ(back.sensing.sigma2_r, c.sensing.sigma2_r);
    EXPECT_EQ(back.psi, c.psi);
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(ConfigJson, HashSeesEveryChange) {
    const ScenarioConfig c = default_config();
    EXPECT_EQ(config_hash_hex(c).size(), 16u);
    for (const auto& key : scalar_keys()) {
        const double current = config_to_json(c)[key].get<double>();
        const bool integral = key == "N_t" || key == "N_r" || key == "k_max" || key == "ekf_passes" || key == "T";
        const double bumped = integral ? current + 1.0 : (current == 0.0 ? 0.5 : current * 1.01);
        ScenarioConfig changed;
        try {
            changed = with_parameter(c, key, bumped);
        } catch (const Error&) {
            continue;  // value rejected by validation
        }
        EXPECT_NE(config_hash(changed), config_hash(c)) << key;
    }
}

TEST(WithParameter, SetsFileUnits) {
    const ScenarioConfig c = with_parameter(default_config(), "P_t", 42);
    EXPECT_NEAR(c.channel.p_t, std::pow(10.0, 1.2), 1e-12);
    EXPECT_EQ(c.channel.p_t, c.sensing.p_t);
    try {
        with_parameter(default_config(), "u1", 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
}

TEST(Artifacts, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 4.0085677706450416e-11, -2.5e300, 6.02214076e23}) {
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
}

TEST(Artifacts, SlotsCsvColumnsAndRoundTrip) {
    const EpisodeLog log = run_episode(default_config(), {Policy::Proposed, std::nullopt}, 2);
    std::istringstream in(slots_csv(log));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header,
              "n,true_x,true_y,est_x,est_y,pred_crb,crb_at_truth,snr_db,wc_snr_db,q1x,q1y,q2x,q2y,d12,sca_iters,"
              "converged");
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        ASSERT_EQ(f.size(), 16u);
        const SlotLog& s = log.slots[row++];
        EXPECT_EQ(std::stoi(f[0]), s.n);
        EXPECT_EQ(std::stod(f[1]), s.truth.x);
        EXPECT_EQ(std::stod(f[4]), s.belief.x_hat.y);
        EXPECT_EQ(std::stod(f[5]), s.pred_crb);
        EXPECT_EQ(std::stod(f[7]), s.snr_db);
        EXPECT_EQ(std::stod(f[9]), s.q1.q.x());
        EXPECT_EQ(std::stod(f[12]), s.q2.q.y());
    }
    EXPECT_EQ(row, log.slots.size());
}

TEST(Manifest, JsonRoundTrip) {
    RunManifest m;
    m.command = "sweep";
    m.config_path = "configs/default_s4.json";
    m.config = with_parameter(default_config(), "gamma_c", 20);
    m.config_hash = config_hash_hex(m.config);
    m.seeds = {1, 2, 3};
    m.out_dir = "out/x";
    m.policy = {Policy::SemiDynamic, Eigen::Vector2d(180, 370)};
    m.parameter = "P_t_dBm";
    m.values = {38, 40, 42};
    const RunManifest back = manifest_from_json(nlohmann::json::parse(manifest_to_json(m).dump()));
    EXPECT_EQ(back.command, m.command);
    EXPECT_EQ(back.seeds, m.seeds);
    EXPECT_EQ(back.config_hash, m.config_hash);
    EXPECT_EQ(config_hash(back.config), config_hash(m.config));
    EXPECT_EQ(back.policy.policy, Policy::SemiDynamic);
    EXPECT_EQ(*back.policy.fixed_q2, Eigen::Vector2d(180, 370));
    EXPECT_EQ(*back.parameter, "P_t_dBm");
    EXPECT_EQ(back.values, m.values);
    EXPECT_EQ(back.version, kToolVersion);
}

TEST(Manifest, TamperedConfigRejected) {
    RunManifest m;
    m.command = "run";
    m.config = default_config();
    m.config_hash = config_hash_hex(m.config);
    m.seeds = {1};
    nlohmann::json j = manifest_to_json(m);
    j["config"]["V_max"] = 25;
    EXPECT_THROW(manifest_from_json(j), Error);
}
