#include "bisac/config.hpp"

#include "bisac/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bisac {

namespace {

// Calibrated with `bisac calibrate-psi` on the default scenario (10^4 samples, coverage 0.95).
constexpr double kCalibratedPsi = 7.0871643547723382e-07;

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::ConfigError, "field '" + field + "': " + what);
}

const std::map<std::string, std::string>& aliases() {
    static const std::map<std::string, std::string> table{
        {"gamma_c", "gamma_c_dB"},   {"P_t", "P_t_dBm"},         {"beta0", "beta0_dB"},
        {"sigma2_c", "sigma2_c_dBm"}, {"sigma2_r", "sigma2_r_dBm"}, {"dt", "delta_T"},
        {"H1", "H_1"},               {"H2", "H_2"},              {"v_max", "V_max"},
    };
    return table;
}

const std::set<std::string>& required_keys() {
    static const std::set<std::string> keys{
        "T",        "delta_T",   "e1",        "e2",        "beta0_dB", "sigma2_c_dBm", "sigma2_r_dBm", "P_t_dBm",
        "N_t",      "N_r",       "sigma2_x",  "sigma2_y",  "sigma2_vx", "sigma2_vy",   "a_tau",        "G",
        "u1",       "target_speed", "q1_1",   "q2_1",      "H_1",      "H_2",          "d_min",        "V_max",
    };
    return keys;
}

const std::set<std::string>& optional_keys() {
    static const std::set<std::string> keys{
        "alpha", "kappa_nlos", "xi", "psi", "eta", "k_max", "target_heading_deg", "gamma_c_dB",
        "process_noise_scale", "measurement_noise_scale", "initial_covariance", "ekf_passes", "c",
    };
    return keys;
}

const std::set<std::string>& vector_keys() {
    static const std::set<std::string> keys{"u1", "q1_1", "q2_1", "initial_covariance"};
    return keys;
}

double number(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (!v.is_number()) config_error(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(key, "must be finite");
    return x;
}

int integer(const json& j, const std::string& key) {
    const double x = number(j, key);
    if (x != std::floor(x) || std::abs(x) > 1e9) config_error(key, "expected an integer");
    return static_cast<int>(x);
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
        config_error(key, "expected an array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
        if (!v[static_cast<std::size_t>(i)].is_number()) config_error(key, "expected numeric entries");
        out(i) = v[static_cast<std::size_t>(i)].get<double>();
        if (!std::isfinite(out(i))) config_error(key, "entries must be finite");
    }
    return out;
}

// A dB value that converts back to exactly `linear`, so dumps reload bit for bit.
double exact_db(double linear, double (*to_linear)(double), double (*to_db)(double)) {
    double d = to_db(linear);
    if (to_linear(d) == linear) return d;
    double up = d;
    double down = d;
    for (int i = 0; i < 64; ++i) {
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
        if (to_linear(up) == linear) return up;
        if (to_linear(down) == linear) return down;
    }
    return d;
}

json array(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.gamma_c = db_to_linear(25.0);
    c.psi = kCalibratedPsi;
    return c;
}

std::string canonical_key(std::string_view key) {
    const auto it = aliases().find(std::string(key));
    return it == aliases().end() ? std::string(key) : it->second;
}

std::vector<std::string> scalar_keys() {
    std::vector<std::string> out;
    for (const auto* set : {&required_keys(), &optional_keys()}) {
        for (const auto& k : *set) {
            if (!vector_keys().contains(k)) out.push_back(k);
        }
    }
    return out;
}

ScenarioConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    }
    json in = json::object();
    for (const auto& [raw_key, value] : j.items()) {
        if (!raw_key.empty() && raw_key.front() == '_') continue;  // comments
        const std::string key = canonical_key(raw_key);
        if (!required_keys().contains(key) && !optional_keys().contains(key)) {
            config_error(raw_key, "unknown key");
        }
        if (in.contains(key)) config_error(raw_key, "given more than once");
        in[key] = value;
    }
    for (const auto& key : required_keys()) {
        if (!in.contains(key)) config_error(key, "missing");
    }

    ScenarioConfig c = default_config();
    c.horizon = number(in, "T");
    c.dt = number(in, "delta_T");
    if (!(c.dt > 0.0)) config_error("delta_T", "must be positive");
    if (!(c.horizon > 0.0)) config_error("T", "must be positive");
    try {
        c.slot_count();
    } catch (const Error&) {
        config_error("T", "T / delta_T must be a positive integer");
    }

    c.channel.e1 = number(in, "e1");
    c.channel.e2 = number(in, "e2");
    c.channel.beta0 = db_to_linear(number(in, "beta0_dB"));
    c.channel.sigma2_c = dbm_to_watts(number(in, "sigma2_c_dBm"));
    const double p_t = dbm_to_watts(number(in, "P_t_dBm"));
    c.channel.p_t = p_t;
    c.sensing.p_t = p_t;
    c.sensing.sigma2_r = dbm_to_watts(number(in, "sigma2_r_dBm"));
    c.channel.n_t = integer(in, "N_t");
    c.sensing.n_t = c.channel.n_t;
    c.sensing.n_r = integer(in, "N_r");
    c.motion = {number(in, "sigma2_x"), number(in, "sigma2_y"), number(in, "sigma2_vx"), number(in, "sigma2_vy")};
    c.sensing.a_tau = number(in, "a_tau");
    c.sensing.g_mf = number(in, "G");
    c.target_start = vec<2>(in, "u1");
    c.target_speed = number(in, "target_speed");
    c.q1_start = vec<2>(in, "q1_1");
    c.q2_start = vec<2>(in, "q2_1");
    c.h1 = number(in, "H_1");
    c.h2 = number(in, "H_2");
    c.d_min = number(in, "d_min");
    c.v_max = number(in, "V_max");

    if (in.contains("alpha")) c.channel.alpha = number(in, "alpha");
    if (in.contains("kappa_nlos")) c.channel.kappa_nlos = number(in, "kappa_nlos");
    if (in.contains("xi")) c.sensing.xi = number(in, "xi");
    if (in.contains("c")) c.sensing.c = number(in, "c");
    if (in.contains("psi")) c.psi = number(in, "psi");
    if (in.contains("eta")) c.eta = number(in, "eta");
    if (in.contains("k_max")) c.k_max = integer(in, "k_max");
    if (in.contains("target_heading_deg")) c.target_heading_deg = number(in, "target_heading_deg");
    if (in.contains("gamma_c_dB")) {
        const double g = number(in, "gamma_c_dB");
        c.gamma_c = g == 0.0 ? 0.0 : db_to_linear(g);
    }
    if (in.contains("process_noise_scale")) c.process_noise_scale = number(in, "process_noise_scale");
    if (in.contains("measurement_noise_scale")) c.measurement_noise_scale = number(in, "measurement_noise_scale");
    if (in.contains("initial_covariance")) c.initial_covariance = vec<4>(in, "initial_covariance");
    if (in.contains("ekf_passes")) c.ekf_passes = integer(in, "ekf_passes");

    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return c;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ScenarioConfig& c) {
    json j = json::object();
    j["T"] = c.horizon;
    j["delta_T"] = c.dt;
    j["e1"] = c.channel.e1;
    j["e2"] = c.channel.e2;
    j["beta0_dB"] = exact_db(c.channel.beta0, db_to_linear, linear_to_db);
    j["sigma2_c_dBm"] = exact_db(c.channel.sigma2_c, dbm_to_watts, watts_to_dbm);
    j["sigma2_r_dBm"] = exact_db(c.sensing.sigma2_r, dbm_to_watts, watts_to_dbm);
    j["P_t_dBm"] = exact_db(c.channel.p_t, dbm_to_watts, watts_to_dbm);
    j["N_t"] = c.channel.n_t;
    j["N_r"] = c.sensing.n_r;
    j["sigma2_x"] = c.motion.sigma2_x;
    j["sigma2_y"] = c.motion.sigma2_y;
    j["sigma2_vx"] = c.motion.sigma2_vx;
    j["sigma2_vy"] = c.motion.sigma2_vy;
    j["a_tau"] = c.sensing.a_tau;
    j["G"] = c.sensing.g_mf;
    j["u1"] = array(c.target_start);
    j["target_speed"] = c.target_speed;
    j["q1_1"] = array(c.q1_start);
    j["q2_1"] = array(c.q2_start);
    j["H_1"] = c.h1;
    j["H_2"] = c.h2;
    j["d_min"] = c.d_min;
    j["V_max"] = c.v_max;
    j["alpha"] = c.channel.alpha;
    j["kappa_nlos"] = c.channel.kappa_nlos;
    j["xi"] = c.sensing.xi;
    j["c"] = c.sensing.c;
    j["psi"] = c.psi;
    j["eta"] = c.eta;
    j["k_max"] = c.k_max;
    j["target_heading_deg"] = c.target_heading_deg;
    j["gamma_c_dB"] = c.gamma_c == 0.0 ? 0.0 : exact_db(c.gamma_c, db_to_linear, linear_to_db);
    j["process_noise_scale"] = c.process_noise_scale;
    j["measurement_noise_scale"] = c.measurement_noise_scale;
    j["initial_covariance"] = array(c.initial_covariance);
    j["ekf_passes"] = c.ekf_passes;
    return j;
}

ScenarioConfig with_parameter(const ScenarioConfig& config, std::string_view key, double value) {
    const std::string k = canonical_key(key);
    if ((!required_keys().contains(k) && !optional_keys().contains(k)) || vector_keys().contains(k)) {
        throw Error(ErrorCode::InvalidConfig, "'" + std::string(key) + "' is not a scalar config key");
    }
    json j = config_to_json(config);
    j[k] = value;
    try {
        return config_from_json(j);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    const std::string text = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const ScenarioConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    return buf;
}

}  // namespace bisac
