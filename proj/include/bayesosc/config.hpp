#pragma once

// Experiment configuration: a JSON document with a `command` selector, a
// mandatory `seed`, an optional `output_path`, and exactly one command block
// (an object under the command's own name) mirroring that module's types.
//
// Parsing is strict and total: unknown keys are rejected, every violated
// constraint is reported (not just the first), and messages name the offending
// field. canonical_config_text emits a normalized form — keys sorted, defaults
// materialized — such that parse_config(canonical_config_text(c)) == c.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayesosc/belief.hpp"
#include "bayesosc/cavity.hpp"
#include "bayesosc/csv.hpp"
#include "bayesosc/elastic_net.hpp"
#include "bayesosc/errors.hpp"
#include "bayesosc/gp_noise.hpp"

namespace bayesosc::io {

struct SearchCommand {
    int n_cells = 0;
    double p_detect = 0.0;
    double p_false = 0.0;
    int true_cell = 0;
    std::string policy = "greedy";  // greedy | brute_force
    int horizon = 1;                // brute_force lookahead
    int max_steps = 100;
    double stop_threshold = 0.99;
    std::vector<double> prior;  // empty = uniform

    bool operator==(const SearchCommand&) const = default;
};

struct TspCommand {
    std::string instance_path;
    double alpha = 0.2;
    double beta = 1.0;
    double node_ratio = 2.5;
    std::optional<double> k_start;  // unset = scaled to the instance spread
    double k_decay = 0.99;
    double k_min = 0.01;
    int iters_per_stage = 25;
    double step_size = 1.0;

    bool operator==(const TspCommand&) const = default;
};

struct QsimQubit {
    double delta = 0.0;
    double g = 0.0;

    bool operator==(const QsimQubit&) const = default;
};

struct QsimCommand {
    int d = 0;
    double omega_r = 1.0;
    double hbar = 1.0;
    std::vector<QsimQubit> qubits;
    double rate = 0.0;
    std::vector<int> targets;  // default: every qubit
    int initial_cavity_level = 1;
    std::vector<int> initial_qubit_levels;  // default: all ground
    double dt = 0.0;
    double t_max = 0.0;
    int record_stride = 1;
    std::string mode = "trajectory";  // trajectory | mean | ensemble
    int n_trajectories = 1;
    bool guard_truncation = true;
    double truncation_threshold = 1e-3;

    bool operator==(const QsimCommand&) const = default;
};

struct NoiseCommand {
    std::string kernel;  // white | ornstein_uhlenbeck | squared_exponential
    double variance = 0.0;
    double correlation_time = 1.0;
    double t0 = 0.0;
    double dt = 0.0;
    int n = 0;
    int count = 0;
    int max_lag = 0;  // default: min(n - 1, 20)

    bool operator==(const NoiseCommand&) const = default;
};

struct ExperimentConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::string output_path = "out";
    std::optional<SearchCommand> search;
    std::optional<TspCommand> tsp;
    std::optional<QsimCommand> qsim;
    std::optional<NoiseCommand> noise;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

// Field-by-field reader over one JSON object. Failed lookups record an error
// naming the field and leave the default in place, so one pass reports every
// problem in the file.
class BlockReader {
public:
    BlockReader(const nlohmann::json& block, std::string path,
                std::vector<std::string>& errors)
        : block_(block), path_(std::move(path)), errors_(errors) {}

    bool has(const std::string& key) {
        known_.insert(key);
        return block_.contains(key);
    }

    void require(const std::string& key) {
        if (!has(key)) errors_.push_back(field(key) + ": required key missing");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = block_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            errors_.push_back(field(key) + ": wrong type");
        }
    }

    void read_integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& value = block_.at(key);
        if (!value.is_number_integer()) {
            errors_.push_back(field(key) + ": must be an integer");
            return;
        }
        out = value.get<int>();
    }

    void check(bool ok, const std::string& key, const std::string& message) {
        if (!ok) errors_.push_back(field(key) + ": " + message);
    }

    // Numeric range guard; emits "<field>: must be within [lo,hi], got v".
    void check_range(double value, double lo, double hi, const std::string& key) {
        if (!(value >= lo && value <= hi))
            errors_.push_back(field(key) + ": must be within [" + format_number(lo) +
                              "," + format_number(hi) + "], got " + format_number(value));
    }

    void finish() {
        for (const auto& [key, value] : block_.items())
            if (!known_.count(key))
                errors_.push_back(field(key) + ": unknown key (typo guard)");
    }

    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const nlohmann::json& block_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> known_;
};

inline void read_search(const nlohmann::json& block, SearchCommand& out,
                        std::vector<std::string>& errors) {
    BlockReader reader(block, "search", errors);
    reader.require("n_cells");
    reader.require("p_detect");
    reader.require("p_false");
    reader.read_integer("n_cells", out.n_cells);
    reader.read("p_detect", out.p_detect);
    reader.read("p_false", out.p_false);
    reader.read_integer("true_cell", out.true_cell);
    reader.read("policy", out.policy);
    reader.read_integer("horizon", out.horizon);
    reader.read_integer("max_steps", out.max_steps);
    reader.read("stop_threshold", out.stop_threshold);
    reader.read("prior", out.prior);
    reader.finish();

    if (block.contains("n_cells")) reader.check(out.n_cells >= 1, "n_cells", "must be >= 1");
    if (block.contains("p_detect")) reader.check_range(out.p_detect, 0.0, 1.0, "p_detect");
    if (block.contains("p_false")) reader.check_range(out.p_false, 0.0, 1.0, "p_false");
    reader.check(out.true_cell >= 0 && out.true_cell < std::max(out.n_cells, 1),
                 "true_cell", "must index a cell");
    reader.check(out.policy == "greedy" || out.policy == "brute_force", "policy",
                 "must be 'greedy' or 'brute_force'");
    reader.check(out.horizon >= 1, "horizon", "must be >= 1");
    reader.check(out.max_steps >= 0, "max_steps", "must be >= 0");
    reader.check(out.stop_threshold > 0.0 && out.stop_threshold <= 1.0, "stop_threshold",
                 "must be in (0,1]");
    reader.check(out.prior.empty() ||
                     static_cast<int>(out.prior.size()) == std::max(out.n_cells, 1),
                 "prior", "length must equal n_cells");
}

inline void read_tsp(const nlohmann::json& block, TspCommand& out,
                     std::vector<std::string>& errors) {
    BlockReader reader(block, "tsp", errors);
    reader.require("instance_path");
    reader.read("instance_path", out.instance_path);
    reader.read("alpha", out.alpha);
    reader.read("beta", out.beta);
    reader.read("node_ratio", out.node_ratio);
    if (reader.has("k_start")) {
        double k = 0.0;
        reader.read("k_start", k);
        out.k_start = k;
    }
    reader.read("k_decay", out.k_decay);
    reader.read("k_min", out.k_min);
    reader.read_integer("iters_per_stage", out.iters_per_stage);
    reader.read("step_size", out.step_size);
    reader.finish();

    reader.check(!out.instance_path.empty(), "instance_path", "must not be empty");
    reader.check(out.alpha > 0.0, "alpha", "must be > 0");
    reader.check(out.beta > 0.0, "beta", "must be > 0");
    reader.check(out.node_ratio >= 1.0, "node_ratio", "must be >= 1");
    if (out.k_start) reader.check(*out.k_start > out.k_min, "k_start", "must be > k_min");
    reader.check(out.k_decay > 0.0 && out.k_decay < 1.0, "k_decay", "must be in (0,1)");
    reader.check(out.k_min > 0.0, "k_min", "must be > 0");
    reader.check(out.iters_per_stage >= 1, "iters_per_stage", "must be >= 1");
    reader.check(out.step_size > 0.0, "step_size", "must be > 0");
}

inline void read_qsim(const nlohmann::json& block, QsimCommand& out,
                      std::vector<std::string>& errors) {
    BlockReader reader(block, "qsim", errors);
    reader.require("d");
    reader.require("qubits");
    reader.require("dt");
    reader.require("t_max");
    reader.read_integer("d", out.d);
    reader.read("omega_r", out.omega_r);
    reader.read("hbar", out.hbar);
    if (reader.has("qubits")) {
        const auto& qubits = block.at("qubits");
        if (!qubits.is_array()) {
            errors.push_back("qsim.qubits: must be an array of {delta, g} objects");
        } else {
            for (std::size_t q = 0; q < qubits.size(); ++q) {
                BlockReader qreader(qubits[q], "qsim.qubits[" + std::to_string(q) + "]",
                                    errors);
                QsimQubit spec;
                qreader.require("delta");
                qreader.require("g");
                qreader.read("delta", spec.delta);
                qreader.read("g", spec.g);
                qreader.finish();
                qreader.check(spec.g >= 0.0, "g", "must be >= 0");
                out.qubits.push_back(spec);
            }
        }
    }
    reader.read("rate", out.rate);
    const bool targets_given = reader.has("targets");
    if (targets_given) reader.read("targets", out.targets);
    reader.read_integer("initial_cavity_level", out.initial_cavity_level);
    const bool initial_given = reader.has("initial_qubit_levels");
    if (initial_given) reader.read("initial_qubit_levels", out.initial_qubit_levels);
    reader.read("dt", out.dt);
    reader.read("t_max", out.t_max);
    reader.read_integer("record_stride", out.record_stride);
    reader.read("mode", out.mode);
    reader.read_integer("n_trajectories", out.n_trajectories);
    reader.read("guard_truncation", out.guard_truncation);
    reader.read("truncation_threshold", out.truncation_threshold);
    reader.finish();

    if (block.contains("d")) reader.check(out.d >= 2, "d", "must be >= 2");
    reader.check(out.omega_r > 0.0, "omega_r", "must be > 0");
    reader.check(out.hbar > 0.0, "hbar", "must be > 0");
    reader.check(out.rate >= 0.0, "rate", "must be >= 0");
    if (!targets_given) {
        out.targets.resize(out.qubits.size());
        for (std::size_t q = 0; q < out.targets.size(); ++q)
            out.targets[q] = static_cast<int>(q);
    } else {
        for (int t : out.targets)
            reader.check(t >= 0 && t < static_cast<int>(out.qubits.size()), "targets",
                         "indices must address a qubit");
    }
    reader.check(out.initial_cavity_level >= 0 &&
                     out.initial_cavity_level < std::max(out.d, 1),
                 "initial_cavity_level", "must be within [0, d)");
    if (!initial_given) {
        out.initial_qubit_levels.assign(out.qubits.size(), 0);
    } else {
        reader.check(out.initial_qubit_levels.size() == out.qubits.size(),
                     "initial_qubit_levels", "length must equal the qubit count");
        for (int level : out.initial_qubit_levels)
            reader.check(level == 0 || level == 1, "initial_qubit_levels",
                         "entries must be 0 or 1");
    }
    if (block.contains("dt")) reader.check(out.dt > 0.0, "dt", "must be > 0");
    if (block.contains("t_max"))
        reader.check(out.t_max >= out.dt, "t_max", "must be >= dt");
    reader.check(out.record_stride >= 1, "record_stride", "must be >= 1");
    reader.check(out.mode == "trajectory" || out.mode == "mean" || out.mode == "ensemble",
                 "mode", "must be 'trajectory', 'mean' or 'ensemble'");
    reader.check(out.mode != "ensemble" || out.n_trajectories >= 2, "n_trajectories",
                 "must be >= 2 for ensemble mode");
    reader.check(out.truncation_threshold > 0.0, "truncation_threshold", "must be > 0");
}

inline void read_noise(const nlohmann::json& block, NoiseCommand& out,
                       std::vector<std::string>& errors) {
    BlockReader reader(block, "noise", errors);
    reader.require("kernel");
    reader.require("variance");
    reader.require("dt");
    reader.require("n");
    reader.require("count");
    reader.read("kernel", out.kernel);
    reader.read("variance", out.variance);
    reader.read("correlation_time", out.correlation_time);
    reader.read("t0", out.t0);
    reader.read("dt", out.dt);
    reader.read_integer("n", out.n);
    reader.read_integer("count", out.count);
    const bool lag_given = reader.has("max_lag");
    if (lag_given) reader.read_integer("max_lag", out.max_lag);
    reader.finish();

    reader.check(out.kernel == "white" || out.kernel == "ornstein_uhlenbeck" ||
                     out.kernel == "squared_exponential",
                 "kernel",
                 "must be 'white', 'ornstein_uhlenbeck' or 'squared_exponential'");
    if (block.contains("variance"))
        reader.check(out.variance > 0.0, "variance", "must be > 0");
    reader.check(out.correlation_time > 0.0, "correlation_time", "must be > 0");
    if (block.contains("dt")) reader.check(out.dt > 0.0, "dt", "must be > 0");
    if (block.contains("n")) reader.check(out.n >= 1, "n", "must be >= 1");
    if (block.contains("count")) reader.check(out.count >= 2, "count", "must be >= 2");
    if (!lag_given) out.max_lag = std::min(out.n - 1, 20);
    reader.check(out.max_lag >= 0 && out.max_lag < std::max(out.n, 1), "max_lag",
                 "must be within [0, n)");
}

}  // namespace detail

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"search", "tsp", "qsim", "noise"};
    return names;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(kModuleName, {std::string("JSON syntax: ") + e.what()});
    }

    std::vector<std::string> errors;
    if (!root.is_object())
        throw ConfigError(kModuleName, {"top level must be a JSON object"});

    ExperimentConfig config;
    detail::BlockReader reader(root, "", errors);
    reader.require("command");
    reader.require("seed");
    reader.read("command", config.command);
    if (reader.has("seed")) {
        const auto& seed = root.at("seed");
        if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                          seed.get<long long>() < 0))
            errors.push_back("seed: must be a non-negative integer");
        else
            config.seed = seed.get<std::uint64_t>();
    }
    reader.read("output_path", config.output_path);
    if (config.output_path.empty()) errors.push_back("output_path: must not be empty");

    // Exactly one command block, and it must match the selector.
    std::vector<std::string> present;
    for (const std::string& name : command_names())
        if (reader.has(name)) present.push_back(name);
    if (present.size() != 1) {
        errors.push_back("exactly one command block required; found " +
                         std::to_string(present.size()));
    } else if (!config.command.empty() && config.command != present.front()) {
        errors.push_back("command '" + config.command + "' does not match the '" +
                         present.front() + "' block");
    } else {
        const nlohmann::json& block = root.at(present.front());
        if (!block.is_object()) {
            errors.push_back(present.front() + ": must be an object");
        } else if (present.front() == "search") {
            config.search.emplace();
            detail::read_search(block, *config.search, errors);
        } else if (present.front() == "tsp") {
            config.tsp.emplace();
            detail::read_tsp(block, *config.tsp, errors);
        } else if (present.front() == "qsim") {
            config.qsim.emplace();
            detail::read_qsim(block, *config.qsim, errors);
        } else {
            config.noise.emplace();
            detail::read_noise(block, *config.noise, errors);
        }
    }
    if (!config.command.empty() &&
        std::find(command_names().begin(), command_names().end(), config.command) ==
            command_names().end())
        errors.push_back("command: must be one of search, tsp, qsim, noise");
    reader.finish();

    if (!errors.empty()) throw ConfigError(kModuleName, std::move(errors));
    return config;
}

// Normalized text form: keys sorted (JSON object order), defaults
// materialized; optional auto-scaled fields appear only when explicitly set.
inline std::string canonical_config_text(const ExperimentConfig& config) {
    nlohmann::json root;
    root["command"] = config.command;
    root["seed"] = config.seed;
    root["output_path"] = config.output_path;
    if (config.search) {
        const SearchCommand& c = *config.search;
        nlohmann::json block;
        block["n_cells"] = c.n_cells;
        block["p_detect"] = c.p_detect;
        block["p_false"] = c.p_false;
        block["true_cell"] = c.true_cell;
        block["policy"] = c.policy;
        block["horizon"] = c.horizon;
        block["max_steps"] = c.max_steps;
        block["stop_threshold"] = c.stop_threshold;
        if (!c.prior.empty()) block["prior"] = c.prior;
        root["search"] = std::move(block);
    }
    if (config.tsp) {
        const TspCommand& c = *config.tsp;
        nlohmann::json block;
        block["instance_path"] = c.instance_path;
        block["alpha"] = c.alpha;
        block["beta"] = c.beta;
        block["node_ratio"] = c.node_ratio;
        if (c.k_start) block["k_start"] = *c.k_start;
        block["k_decay"] = c.k_decay;
        block["k_min"] = c.k_min;
        block["iters_per_stage"] = c.iters_per_stage;
        block["step_size"] = c.step_size;
        root["tsp"] = std::move(block);
    }
    if (config.qsim) {
        const QsimCommand& c = *config.qsim;
        nlohmann::json block;
        block["d"] = c.d;
        block["omega_r"] = c.omega_r;
        block["hbar"] = c.hbar;
        block["qubits"] = nlohmann::json::array();
        for (const QsimQubit& q : c.qubits)
            block["qubits"].push_back({{"delta", q.delta}, {"g", q.g}});
        block["rate"] = c.rate;
        block["targets"] = c.targets;
        block["initial_cavity_level"] = c.initial_cavity_level;
        block["initial_qubit_levels"] = c.initial_qubit_levels;
        block["dt"] = c.dt;
        block["t_max"] = c.t_max;
        block["record_stride"] = c.record_stride;
        block["mode"] = c.mode;
        block["n_trajectories"] = c.n_trajectories;
        block["guard_truncation"] = c.guard_truncation;
        block["truncation_threshold"] = c.truncation_threshold;
        root["qsim"] = std::move(block);
    }
    if (config.noise) {
        const NoiseCommand& c = *config.noise;
        nlohmann::json block;
        block["kernel"] = c.kernel;
        block["variance"] = c.variance;
        block["correlation_time"] = c.correlation_time;
        block["t0"] = c.t0;
        block["dt"] = c.dt;
        block["n"] = c.n;
        block["count"] = c.count;
        block["max_lag"] = c.max_lag;
        root["noise"] = std::move(block);
    }
    return root.dump(2) + "\n";
}

}  // namespace bayesosc::io
