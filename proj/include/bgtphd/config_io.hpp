#pragma once

// YAML loading/dumping of ScenarioConfig and the experiment grid. Requires
// yaml-cpp.

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgtphd/scenario.hpp"

namespace bgtphd {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filter variants to run and where to write the results.
struct ExperimentSpec {
    ScenarioConfig scenario;
    std::vector<FilterVariant> variants{{FilterKind::robust, 1},  {FilterKind::robust, 2},  {FilterKind::robust, 5},
                                        {FilterKind::robust, 10}, {FilterKind::robust, 15}, {FilterKind::robust, 30},
                                        {FilterKind::robust, 60}, {FilterKind::baseline, 5}};
    std::string output_dir = "results";
    bool compute_metric = true;
};

inline std::string check_experiment(const ExperimentSpec& spec) {
    if (spec.variants.empty()) return "at least one filter variant is required";
    for (const auto& v : spec.variants) {
        if (v.window < 1) return "L values must be positive";
    }
    return check_config(spec.scenario);
}

namespace detail {

[[noreturn]] inline void config_fail(const YAML::Node& node, const std::string& msg) {
    std::ostringstream os;
    if (node.IsDefined() && node.Mark().line >= 0) {
        os << "line " << node.Mark().line + 1 << ": " << msg;
    } else {
        os << msg;
    }
    throw ConfigError(os.str());
}

template <typename T>
T read(const YAML::Node& node, const std::string& key, const T& fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        config_fail(v, "invalid value for '" + key + "'");
    }
}

inline Vector read_vector(const YAML::Node& v, const std::string& key) {
    if (!v.IsSequence()) config_fail(v, "'" + key + "' must be a list of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        try {
            out(static_cast<Eigen::Index>(i)) = v[i].as<double>();
        } catch (const YAML::Exception&) {
            config_fail(v[i], "'" + key + "' entries must be numbers");
        }
    }
    return out;
}

inline Matrix read_matrix(const YAML::Node& v, const std::string& key) {
    if (!v.IsSequence() || v.size() == 0) config_fail(v, "'" + key + "' must be a list of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Matrix out;
    for (std::size_t r = 0; r < rows; ++r) {
        const Vector row = read_vector(v[r], key);
        if (r == 0) {
            cols = static_cast<std::size_t>(row.size());
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (static_cast<std::size_t>(row.size()) != cols) {
            config_fail(v[r], "'" + key + "' rows must have equal length");
        }
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

/// Matrix given either in full (`key`) or by its diagonal (`key_diag`).
inline Matrix read_matrix_or_diag(const YAML::Node& node, const std::string& key, const Matrix& fallback) {
    if (node[key]) return read_matrix(node[key], key);
    if (node[key + "_diag"]) return read_vector(node[key + "_diag"], key + "_diag").asDiagonal();
    return fallback;
}

inline BetaParams read_beta(const YAML::Node& node, const BetaParams& fallback) {
    const YAML::Node v = node["beta"];
    if (!v) return fallback;
    const Vector b = read_vector(v, "beta");
    if (b.size() != 2) config_fail(v, "'beta' must be [u, v]");
    return {b(0), b(1)};
}

/// Shortest decimal text that parses back to the same double.
inline std::string num(double v) {
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline void emit_vector(YAML::Emitter& out, const Vector& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << num(v(i));
    out << YAML::EndSeq;
}

inline void emit_matrix(YAML::Emitter& out, const Matrix& m) {
    out << YAML::BeginSeq;
    for (Eigen::Index r = 0; r < m.rows(); ++r) emit_vector(out, m.row(r).transpose());
    out << YAML::EndSeq;
}

}  // namespace detail

inline ExperimentSpec parse_experiment(const YAML::Node& root) {
    using namespace detail;
    ExperimentSpec spec;
    ScenarioConfig& c = spec.scenario;
    if (root && !root.IsMap() && !root.IsNull()) config_fail(root, "top level must be a mapping");

    if (const YAML::Node s = root["scenario"]) {
        c.horizon = read(s, "horizon", c.horizon);
        c.run_count = read(s, "run_count", c.run_count);
        c.master_seed = read(s, "master_seed", c.master_seed);
        c.truth_process_noise = read(s, "truth_process_noise", c.truth_process_noise);
    }
    if (const YAML::Node m = root["motion"]) {
        const std::string type = read<std::string>(m, "type", "ct");
        if (type == "ct") {
            CtModel ct;
            ct.dt = read(m, "dt", ct.dt);
            ct.accel_std = read(m, "accel_std", ct.accel_std);
            ct.turn_std = read(m, "turn_std", ct.turn_std);
            c.motion = ct;
        } else if (type == "linear") {
            if (!m["F"] || !m["Q"]) config_fail(m, "linear motion needs F and Q");
            c.motion = LinearMotion{read_matrix(m["F"], "F"), read_matrix(m["Q"], "Q")};
        } else {
            config_fail(m["type"], "unknown motion type '" + type + "'");
        }
    }
    if (const YAML::Node s = root["sensor"]) {
        const std::string type = read<std::string>(s, "type", "bearing_range");
        if (type == "bearing_range") {
            BearingRangeSensor br;
            br.R = read_matrix_or_diag(s, "R", br.R);
            c.sensor = br;
        } else if (type == "linear") {
            if (!s["H"] || !(s["R"] || s["R_diag"])) config_fail(s, "linear sensor needs H and R");
            c.sensor = LinearSensor{read_matrix(s["H"], "H"), read_matrix_or_diag(s, "R", Matrix())};
        } else {
            config_fail(s["type"], "unknown sensor type '" + type + "'");
        }
    }
    if (const YAML::Node r = root["region"]) {
        for (const char* key : {"position_lower", "position_upper"}) {
            if (!r[key]) continue;
            const Vector v = read_vector(r[key], key);
            if (v.size() != 2) config_fail(r[key], std::string("'") + key + "' must have two entries");
            (std::string(key) == "position_lower" ? c.position_lower : c.position_upper) = v;
        }
        if (r["clutter_lower"]) c.clutter_region.lower = read_vector(r["clutter_lower"], "clutter_lower");
        if (r["clutter_upper"]) c.clutter_region.upper = read_vector(r["clutter_upper"], "clutter_upper");
    }
    if (const YAML::Node t = root["truth"]) {
        c.p_detect = read(t, "p_detect", c.p_detect);
        c.clutter_generators = read(t, "clutter_generators", c.clutter_generators);
        c.clutter_detect = read(t, "clutter_detect", c.clutter_detect);
        if (const YAML::Node targets = t["targets"]) {
            if (!targets.IsSequence()) config_fail(targets, "'targets' must be a list");
            c.targets.clear();
            for (const auto& n : targets) {
                if (!n["state"]) config_fail(n, "target needs 'state'");
                c.targets.push_back({read_vector(n["state"], "state"), read(n, "birth", 1), read(n, "death", c.horizon)});
            }
        }
    }
    if (const YAML::Node f = root["filter"]) {
        c.p_survive = read(f, "p_survive", c.p_survive);
        c.p_survive_clutter = read(f, "p_survive_clutter", c.p_survive_clutter);
        c.k_beta = read(f, "k_beta", c.k_beta);
        c.window = read(f, "window", c.window);
        c.reduction.prune = read(f, "prune", c.reduction.prune);
        c.reduction.absorb = read(f, "absorb", c.reduction.absorb);
        c.reduction.max_components = read(f, "max_components", c.reduction.max_components);
        if (const YAML::Node births = f["track_births"]) {
            if (!births.IsSequence()) config_fail(births, "'track_births' must be a list");
            c.track_births.clear();
            for (const auto& n : births) {
                if (!n["mean"]) config_fail(n, "track birth needs 'mean'");
                TrackBirth b;
                b.weight = read(n, "weight", 0.0);
                b.mean = read_vector(n["mean"], "mean");
                b.cov = read_matrix_or_diag(n, "cov", Matrix());
                if (b.cov.size() == 0) config_fail(n, "track birth needs 'cov' or 'cov_diag'");
                b.beta = read_beta(n, b.beta);
                c.track_births.push_back(std::move(b));
            }
        }
        if (const YAML::Node births = f["clutter_births"]) {
            if (!births.IsSequence()) config_fail(births, "'clutter_births' must be a list");
            c.clutter_births.clear();
            for (const auto& n : births) c.clutter_births.push_back({read(n, "weight", 0.0), read_beta(n, {1.0, 1.0})});
        }
    }
    if (const YAML::Node m = root["metric"]) {
        c.metric.p = read(m, "p", c.metric.p);
        c.metric.c = read(m, "c", c.metric.c);
        c.metric.gamma = read(m, "gamma", c.metric.gamma);
    }
    if (const YAML::Node e = root["experiment"]) {
        spec.output_dir = read(e, "output", spec.output_dir);
        spec.compute_metric = read(e, "compute_metric", spec.compute_metric);
        if (const YAML::Node vs = e["variants"]) {
            if (!vs.IsSequence()) config_fail(vs, "'variants' must be a list");
            spec.variants.clear();
            for (const auto& n : vs) {
                FilterKind kind;
                try {
                    kind = filter_kind_from_string(read<std::string>(n, "filter", ""));
                } catch (const std::invalid_argument& ex) {
                    config_fail(n, ex.what());
                }
                if (!n["windows"]) config_fail(n, "variant needs 'windows'");
                const Vector ws = read_vector(n["windows"], "windows");
                for (Eigen::Index i = 0; i < ws.size(); ++i) spec.variants.push_back({kind, static_cast<int>(ws(i))});
            }
        }
    }
    if (const std::string problem = check_experiment(spec); !problem.empty()) throw ConfigError(problem);
    return spec;
}

inline ExperimentSpec parse_experiment_string(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    return parse_experiment(root);
}

inline ExperimentSpec load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_string(buf.str());
}

inline std::string dump_experiment(const ExperimentSpec& spec) {
    using detail::emit_matrix;
    using detail::emit_vector;
    const ScenarioConfig& c = spec.scenario;
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << c.horizon;
    out << YAML::Key << "run_count" << YAML::Value << c.run_count;
    out << YAML::Key << "master_seed" << YAML::Value << c.master_seed;
    out << YAML::Key << "truth_process_noise" << YAML::Value << c.truth_process_noise;
    out << YAML::EndMap;

    out << YAML::Key << "motion" << YAML::Value << YAML::BeginMap;
    if (const auto* ct = std::get_if<CtModel>(&c.motion)) {
        out << YAML::Key << "type" << YAML::Value << "ct";
        out << YAML::Key << "dt" << YAML::Value << detail::num(ct->dt);
        out << YAML::Key << "accel_std" << YAML::Value << detail::num(ct->accel_std);
        out << YAML::Key << "turn_std" << YAML::Value << detail::num(ct->turn_std);
    } else {
        const auto& lin = std::get<LinearMotion>(c.motion);
        out << YAML::Key << "type" << YAML::Value << "linear";
        out << YAML::Key << "F" << YAML::Value;
        emit_matrix(out, lin.F);
        out << YAML::Key << "Q" << YAML::Value;
        emit_matrix(out, lin.Q);
    }
    out << YAML::EndMap;

    out << YAML::Key << "sensor" << YAML::Value << YAML::BeginMap;
    if (const auto* br = std::get_if<BearingRangeSensor>(&c.sensor)) {
        out << YAML::Key << "type" << YAML::Value << "bearing_range";
        out << YAML::Key << "R" << YAML::Value;
        emit_matrix(out, br->R);
    } else {
        const auto& lin = std::get<LinearSensor>(c.sensor);
        out << YAML::Key << "type" << YAML::Value << "linear";
        out << YAML::Key << "H" << YAML::Value;
        emit_matrix(out, lin.H);
        out << YAML::Key << "R" << YAML::Value;
        emit_matrix(out, lin.R);
    }
    out << YAML::EndMap;

    out << YAML::Key << "region" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "position_lower" << YAML::Value;
    emit_vector(out, c.position_lower);
    out << YAML::Key << "position_upper" << YAML::Value;
    emit_vector(out, c.position_upper);
    out << YAML::Key << "clutter_lower" << YAML::Value;
    emit_vector(out, c.clutter_region.lower);
    out << YAML::Key << "clutter_upper" << YAML::Value;
    emit_vector(out, c.clutter_region.upper);
    out << YAML::EndMap;

    out << YAML::Key << "truth" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p_detect" << YAML::Value << detail::num(c.p_detect);
    out << YAML::Key << "clutter_generators" << YAML::Value << c.clutter_generators;
    out << YAML::Key << "clutter_detect" << YAML::Value << detail::num(c.clutter_detect);
    out << YAML::Key << "targets" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : c.targets) {
        out << YAML::BeginMap;
        out << YAML::Key << "state" << YAML::Value;
        emit_vector(out, t.initial_state);
        out << YAML::Key << "birth" << YAML::Value << t.birth;
        out << YAML::Key << "death" << YAML::Value << t.death;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "filter" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p_survive" << YAML::Value << detail::num(c.p_survive);
    out << YAML::Key << "p_survive_clutter" << YAML::Value << detail::num(c.p_survive_clutter);
    out << YAML::Key << "k_beta" << YAML::Value << detail::num(c.k_beta);
    out << YAML::Key << "window" << YAML::Value << c.window;
    out << YAML::Key << "prune" << YAML::Value << detail::num(c.reduction.prune);
    out << YAML::Key << "absorb" << YAML::Value << detail::num(c.reduction.absorb);
    out << YAML::Key << "max_components" << YAML::Value << c.reduction.max_components;
    out << YAML::Key << "track_births" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : c.track_births) {
        out << YAML::BeginMap;
        out << YAML::Key << "weight" << YAML::Value << detail::num(b.weight);
        out << YAML::Key << "mean" << YAML::Value;
        emit_vector(out, b.mean);
        out << YAML::Key << "cov" << YAML::Value;
        emit_matrix(out, b.cov);
        out << YAML::Key << "beta" << YAML::Value;
        emit_vector(out, Eigen::Vector2d(b.beta.u, b.beta.v));
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "clutter_births" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : c.clutter_births) {
        out << YAML::BeginMap;
        out << YAML::Key << "weight" << YAML::Value << detail::num(b.weight);
        out << YAML::Key << "beta" << YAML::Value;
        emit_vector(out, Eigen::Vector2d(b.beta.u, b.beta.v));
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "metric" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p" << YAML::Value << detail::num(c.metric.p);
    out << YAML::Key << "c" << YAML::Value << detail::num(c.metric.c);
    out << YAML::Key << "gamma" << YAML::Value << detail::num(c.metric.gamma);
    out << YAML::EndMap;

    out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "output" << YAML::Value << spec.output_dir;
    out << YAML::Key << "compute_metric" << YAML::Value << spec.compute_metric;
    out << YAML::Key << "variants" << YAML::Value << YAML::BeginSeq;
    for (FilterKind kind : {FilterKind::robust, FilterKind::baseline}) {
        std::vector<int> ws;
        for (const auto& v : spec.variants) {
            if (v.kind == kind) ws.push_back(v.window);
        }
        if (ws.empty()) continue;
        out << YAML::BeginMap;
        out << YAML::Key << "filter" << YAML::Value << to_string(kind);
        out << YAML::Key << "windows" << YAML::Value << YAML::Flow << ws;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace bgtphd
