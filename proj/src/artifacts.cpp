#include "bisac/artifacts.hpp"

#include "bisac/config.hpp"
#include "bisac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace bisac {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

class Row {
public:
    explicit Row(std::ostringstream& out) : out_(out) {}
    ~Row() { out_ << '\n'; }
    Row& operator<<(double x) { return put(format_double(x)); }
    Row& operator<<(int x) { return put(std::to_string(x)); }
    Row& operator<<(std::uint64_t x) { return put(std::to_string(x)); }
    Row& operator<<(const std::string& s) { return put(s); }

private:
    Row& put(const std::string& s) {
        if (!first_) out_ << ',';
        first_ = false;
        out_ << s;
        return *this;
    }
    std::ostringstream& out_;
    bool first_ = true;
};

}  // namespace

std::string slots_csv(const EpisodeLog& episode) {
    std::ostringstream out;
    out << "n,true_x,true_y,est_x,est_y,pred_crb,crb_at_truth,snr_db,wc_snr_db,q1x,q1y,q2x,q2y,d12,sca_iters,"
           "converged\n";
    for (const auto& s : episode.slots) {
        Row(out) << s.n << s.truth.x << s.truth.y << s.belief.x_hat.x << s.belief.x_hat.y << s.pred_crb
                 << s.crb_at_truth << s.snr_db << s.wc_snr_db << s.q1.q.x() << s.q1.q.y() << s.q2.q.x()
                 << s.q2.q.y() << (s.q1.q - s.q2.q).norm() << s.sca_iterations << (s.converged ? 1 : 0);
    }
    return out.str();
}

std::string trace_csv(const EpisodeLog& episode) {
    std::ostringstream out;
    out << "n,k,objective,step_norm,halvings,q1x,q1y,q2x,q2y\n";
    for (const auto& s : episode.slots) {
        const ScaTrace& t = s.trace;
        for (std::size_t k = 0; k < t.objective.size(); ++k) {
            const double step = k == 0 ? 0.0 : t.step_norms[k - 1];
            const int halvings = k == 0 ? 0 : t.halvings[k - 1];
            const JointPosition& z = t.iterates[k];
            Row(out) << s.n << static_cast<int>(k) << t.objective[k] << step << halvings << z(0) << z(1) << z(2)
                     << z(3);
        }
    }
    return out.str();
}

std::string episode_summary_csv(const std::vector<EpisodeLog>& episodes) {
    std::ostringstream out;
    out << "policy,seed,position_rmse,mean_crb,max_crb,snr_satisfaction,mean_uav_distance,"
           "mean_uav1_target_distance,constraint_violations,snr_infeasible_slots,convergence_rate\n";
    for (const auto& e : episodes) {
        const EpisodeSummary& s = e.summary;
        Row(out) << policy_label(e.policy) << e.seed << s.position_rmse << s.mean_crb << s.max_crb
                 << s.snr_satisfaction << s.mean_uav_distance << s.mean_uav1_target_distance
                 << s.constraint_violations << s.snr_infeasible_slots << s.convergence_rate;
    }
    return out.str();
}

std::string aggregate_summary_csv(const std::vector<PolicyAggregate>& rows) {
    std::ostringstream out;
    out << "policy,episodes,slots,position_rmse,mean_crb,max_crb,snr_satisfaction,mean_uav_distance,"
           "mean_uav1_target_distance,constraint_violations,snr_infeasible_slots,convergence_rate\n";
    for (const auto& a : rows) {
        Row(out) << a.label << a.episodes << a.slots << a.position_rmse << a.mean_crb << a.max_crb
                 << a.snr_satisfaction << a.mean_uav_distance << a.mean_uav1_target_distance
                 << a.constraint_violations << a.snr_infeasible_slots << a.convergence_rate;
    }
    return out.str();
}

std::string polyline_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const std::vector<Series>& series) {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 420.0;
    constexpr double kMargin = 60.0;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = y0 = 0.0;
        x1 = y1 = 1.0;
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + std::max(1.0, std::abs(y0));
    auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
    auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };

    std::ostringstream out;
    char buf[160];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  kMargin, kMargin, kWidth - 2 * kMargin, kHeight - 2 * kMargin);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.4g</text>\n", kMargin, kHeight - kMargin + 16, x0);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                  kWidth - kMargin, kHeight - kMargin + 16, x1);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                  kMargin - 4, kHeight - kMargin, y0);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                  kMargin - 4, kMargin + 10, y1);
    out << buf;
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << kHeight / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << kHeight / 2
        << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            out << buf;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                      kWidth - kMargin + 4, kMargin + 14.0 * static_cast<double>(k + 1), color, s.label.c_str());
        out << buf;
    }
    out << "</svg>\n";
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::InvalidInput, "write failed for " + path.string());
    }
}

void write_episode_artifacts(const std::filesystem::path& dir, const EpisodeLog& episode, bool svg) {
    std::filesystem::create_directories(dir);
    write_text(dir / "slots.csv", slots_csv(episode));
    write_text(dir / "trace.csv", trace_csv(episode));
    write_text(dir / "summary.csv", episode_summary_csv({episode}));
    if (!svg) return;

    Series crb_pred{"predicted", {}, {}};
    Series crb_true{"at truth", {}, {}};
    Series truth{"target", {}, {}};
    Series est{"estimate", {}, {}};
    Series uav1{"UAV-1", {episode.q1_start.q.x()}, {episode.q1_start.q.y()}};
    Series uav2{"UAV-2", {episode.q2_start.q.x()}, {episode.q2_start.q.y()}};
    Series trace{"SCA objective", {}, {}};
    double step = 0.0;
    for (const auto& s : episode.slots) {
        crb_pred.x.push_back(s.n);
        crb_pred.y.push_back(s.pred_crb);
        crb_true.x.push_back(s.n);
        crb_true.y.push_back(s.crb_at_truth);
        truth.x.push_back(s.truth.x);
        truth.y.push_back(s.truth.y);
        est.x.push_back(s.belief.x_hat.x);
        est.y.push_back(s.belief.x_hat.y);
        uav1.x.push_back(s.q1.q.x());
        uav1.y.push_back(s.q1.q.y());
        uav2.x.push_back(s.q2.q.x());
        uav2.y.push_back(s.q2.q.y());
        for (double f : s.trace.objective) {
            trace.x.push_back(step);
            trace.y.push_back(f);
            step += 1.0;
        }
    }
    write_text(dir / "crb.svg", polyline_svg("CRB per slot", "slot", "CRB [m^2]", {crb_pred, crb_true}));
    write_text(dir / "trajectory.svg", polyline_svg("Trajectories", "x [m]", "y [m]", {truth, est, uav1, uav2}));
    write_text(dir / "trace.svg", polyline_svg("SCA iterates", "iterate", "predicted CRB [m^2]", {trace}));
}

json manifest_to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config_path"] = m.config_path;
    j["config_hash"] = m.config_hash;
    j["seeds"] = m.seeds;
    j["out_dir"] = m.out_dir;
    j["version"] = m.version;
    j["policy"] = std::string(to_string(m.policy.policy));
    if (m.policy.fixed_q2) {
        j["fixed_q2"] = {m.policy.fixed_q2->x(), m.policy.fixed_q2->y()};
    }
    if (m.parameter) {
        j["param"] = *m.parameter;
        j["values"] = m.values;
    }
    j["strict"] = m.strict;
    j["config"] = config_to_json(m.config);
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config_path = j.value("config_path", std::string());
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        m.out_dir = j.value("out_dir", std::string());
        m.version = j.value("version", std::string());
        m.policy.policy = parse_policy(j.at("policy").get<std::string>());
        if (j.contains("fixed_q2")) {
            const auto q = j.at("fixed_q2").get<std::vector<double>>();
            if (q.size() != 2) throw Error(ErrorCode::ConfigError, "manifest fixed_q2 must have two entries");
            m.policy.fixed_q2 = Eigen::Vector2d(q[0], q[1]);
        }
        if (j.contains("param")) {
            m.parameter = j.at("param").get<std::string>();
            m.values = j.at("values").get<std::vector<double>>();
        }
        m.strict = j.value("strict", false);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed manifest: ") + e.what());
    }
    m.config = config_from_json(j.at("config"));
    if (config_hash_hex(m.config) != m.config_hash) {
        throw Error(ErrorCode::ConfigError, "manifest config does not match its hash");
    }
    return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    write_text(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot open manifest " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace bisac
