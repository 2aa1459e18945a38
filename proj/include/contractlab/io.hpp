#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractlab/errors.hpp"
#include "contractlab/run.hpp"
#include "contractlab/sweep.hpp"

namespace contractlab {

inline std::string env_name(EnvKind env) {
    return env == EnvKind::Single ? "single" : "dual";
}

inline EnvKind env_from_string(const std::string& s) {
    if (s == "single") return EnvKind::Single;
    if (s == "dual") return EnvKind::Dual;
    throw ConfigError("config key \"env\": expected \"single\" or \"dual\", got \"" + s + "\"");
}

inline std::string blend_form_name(BlendForm form) {
    return form == BlendForm::ProfitBlend ? "algorithm2" : "section54";
}

inline BlendForm blend_form_from_string(const std::string& s) {
    if (s == "algorithm2") return BlendForm::ProfitBlend;
    if (s == "section54") return BlendForm::MarginScaled;
    throw ConfigError("config key \"blend_form\": expected \"algorithm2\" or \"section54\", got \"" +
                      s + "\"");
}

namespace detail {

inline double require_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key \"" + key + "\": expected a number");
    return v.get<double>();
}

inline std::uint64_t require_count(const nlohmann::json& v, const std::string& key) {
    const double d = require_number(v, key);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
        throw ConfigError("config key \"" + key + "\": expected a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

inline int require_int(const nlohmann::json& v, const std::string& key) {
    const double d = require_number(v, key);
    if (d != std::floor(d) || d < -2e9 || d > 2e9)
        throw ConfigError("config key \"" + key + "\": expected an integer");
    return static_cast<int>(d);
}

inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw IoError(std::string("refusing to write non-finite value for ") + what);
}

}  // namespace detail

// Applies one parsed config document on top of the environment's defaults.
// Unknown keys are rejected; missing keys keep their defaults.
inline RunConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");

    EnvKind env = EnvKind::Single;
    if (auto it = doc.find("env"); it != doc.end()) {
        if (!it->is_string()) throw ConfigError("config key \"env\": expected a string");
        env = env_from_string(it->get<std::string>());
    }
    RunConfig cfg = RunConfig::defaults_for(env);
    bool saw_snapshot_every = false;
    bool saw_convergence_window = false;

    for (const auto& [key, value] : doc.items()) {
        if (key == "env") continue;
        if (key == "I1") cfg.I1 = detail::require_number(value, key);
        else if (key == "I2") cfg.I2 = detail::require_number(value, key);
        else if (key == "T1") cfg.T1 = detail::require_number(value, key);
        else if (key == "T2") cfg.T2 = detail::require_number(value, key);
        else if (key == "c") cfg.c = detail::require_number(value, key);
        else if (key == "kappa") cfg.kappa = detail::require_number(value, key);
        else if (key == "beta") cfg.beta = detail::require_number(value, key);
        else if (key == "d_p") cfg.d_p = detail::require_int(value, key);
        else if (key == "d_e") cfg.d_e = detail::require_int(value, key);
        else if (key == "alpha") cfg.alpha = detail::require_number(value, key);
        else if (key == "delta") cfg.delta = detail::require_number(value, key);
        else if (key == "t_max") cfg.t_max = detail::require_count(value, key);
        else if (key == "snapshot_every") {
            cfg.snapshot_every = detail::require_count(value, key);
            saw_snapshot_every = true;
        } else if (key == "seed") cfg.seed = detail::require_count(value, key);
        else if (key == "convergence_window") {
            cfg.convergence_window = detail::require_count(value, key);
            saw_convergence_window = true;
        }
        else if (key == "blend_form") {
            if (!value.is_string())
                throw ConfigError("config key \"blend_form\": expected a string");
            cfg.blend_form = blend_form_from_string(value.get<std::string>());
        } else if (key == "exploration") {
            if (!value.is_object() || value.size() != 1)
                throw ConfigError(
                    "config key \"exploration\": expected an object with exactly one of "
                    "\"fixed\" or \"exp_decay\"");
            const auto& [ekey, evalue] = *value.items().begin();
            const double rate = detail::require_number(evalue, "exploration." + ekey);
            try {
                if (ekey == "fixed") cfg.exploration = ExplorationSchedule::fixed(rate);
                else if (ekey == "exp_decay") cfg.exploration = ExplorationSchedule::exp_decay(rate);
                else throw ConfigError("config key \"exploration\": unknown variant \"" + ekey + "\"");
            } catch (const std::invalid_argument& ex) {
                throw ConfigError("config key \"exploration." + ekey + "\": " + ex.what());
            }
        } else {
            throw ConfigError("unknown config key \"" + key + "\"");
        }
    }

    // A run not saying how often to snapshot gets roughly a hundred rows, and
    // a defaulted convergence window never exceeds the run length.
    if (!saw_snapshot_every) cfg.snapshot_every = std::max<std::uint64_t>(1, cfg.t_max / 100);
    if (!saw_convergence_window && cfg.convergence_window > cfg.t_max)
        cfg.convergence_window = cfg.t_max;
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw ConfigError("config parse error in " + path + ": " + ex.what());
    }
    return config_from_json(doc);
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json doc;
    doc["env"] = env_name(cfg.env);
    doc["I1"] = cfg.I1;
    doc["I2"] = cfg.I2;
    doc["T1"] = cfg.T1;
    doc["T2"] = cfg.T2;
    doc["c"] = cfg.c;
    doc["kappa"] = cfg.kappa;
    doc["beta"] = cfg.beta;
    doc["d_p"] = cfg.d_p;
    doc["d_e"] = cfg.d_e;
    doc["alpha"] = cfg.alpha;
    doc["delta"] = cfg.delta;
    doc["exploration"] =
        cfg.exploration.kind() == ExplorationSchedule::Kind::Fixed
            ? nlohmann::json{{"fixed", cfg.exploration.value()}}
            : nlohmann::json{{"exp_decay", cfg.exploration.value()}};
    doc["t_max"] = cfg.t_max;
    doc["snapshot_every"] = cfg.snapshot_every;
    doc["seed"] = cfg.seed;
    doc["convergence_window"] = cfg.convergence_window;
    doc["blend_form"] = blend_form_name(cfg.blend_form);
    return doc;
}

inline void write_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << config_to_json(cfg).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

// JSON-lines trajectory, one object per snapshot, strictly increasing t,
// last line flagged "final": true. Single runs omit p2. Doubles serialize
// with shortest round-trip precision.
inline void write_trajectory(const RunResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    const bool dual = result.config.env == EnvKind::Dual;
    for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
        const Snapshot& s = result.snapshots[i];
        for (double v : {s.epsilon, s.p1, s.p2, s.effort.e1, s.effort.e2, s.pi1, s.pi2,
                         s.agent_profit, s.effective_tax})
            detail::check_finite(v, "trajectory");
        nlohmann::json line;
        line["t"] = s.t;
        line["epsilon"] = s.epsilon;
        line["p1"] = s.p1;
        if (dual) line["p2"] = s.p2;
        line["e1"] = s.effort.e1;
        line["e2"] = s.effort.e2;
        line["pi1"] = s.pi1;
        line["pi2"] = s.pi2;
        line["agent_profit"] = s.agent_profit;
        line["effective_tax"] = s.effective_tax;
        if (i + 1 == result.snapshots.size()) line["final"] = true;
        out << line.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

// Test and tooling helper: parse a JSON-lines trajectory back.
inline std::vector<nlohmann::json> read_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file: " + path);
    std::vector<nlohmann::json> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        lines.push_back(nlohmann::json::parse(line));
    }
    return lines;
}

// Plot-ready per-grid-point aggregates, rows sorted ascending by the swept
// value, numeric columns in 6-decimal fixed notation.
inline void write_sweep_csv(const SweepSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "param,value,mean_eff_tax,median_eff_tax,p10,p90,converged_frac,n_seeds\n";
    char buf[256];
    for (const SweepPoint& pt : summary.points) {
        for (double v : {pt.value, pt.mean_eff_tax, pt.median_eff_tax, pt.p10, pt.p90,
                         pt.converged_frac})
            detail::check_finite(v, "sweep summary");
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                      sweep_param_name(summary.param).c_str(), pt.value, pt.mean_eff_tax,
                      pt.median_eff_tax, pt.p10, pt.p90, pt.converged_frac, pt.n_seeds);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

// Learned value surface of a one-state table: action_index, the tax level it
// stands for, and the value with full round-trip precision.
inline void dump_qtable(const QTable& q, const std::string& path) {
    if (q.n_states() != 1)
        throw std::invalid_argument("dump_qtable: expected a one-state table");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "action_index,tax_rate,q_value\n";
    char buf[128];
    const auto row = q.row(0);
    for (int a = 0; a < q.n_actions(); ++a) {
        detail::check_finite(row[a], "q table");
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.17g\n", a,
                      static_cast<double>(a) / (q.n_actions() - 1), row[a]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

// Full best-response table, one row per (p1, p2) grid cell, p1-major.
inline void write_agent_table_csv(const AgentDecisionTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "p1,p2,e1,e2,agent_profit\n";
    char buf[192];
    const DualContractParams& params = table.params();
    for (int i = 0; i < params.d_p; ++i) {
        for (int j = 0; j < params.d_p; ++j) {
            const EffortPair e = table.effort(i, j);
            const double profit = table.cached_agent_profit(table.cell(i, j));
            detail::check_finite(profit, "agent table");
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f\n", params.tax_at(i),
                          params.tax_at(j), e.e1, e.e2, profit);
            out << buf;
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace contractlab
