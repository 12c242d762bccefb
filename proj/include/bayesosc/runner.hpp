#pragma once

// Experiment dispatch: takes a validated ExperimentConfig, runs the module it
// names, and writes CSV artifacts plus a metadata sidecar into output_path.
// All numeric output goes through the shortest-round-trip formatter, so a
// fixed seed yields byte-identical CSV bodies across runs; metadata.json
// carries the wall time and is therefore excluded from that contract.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayesosc/belief.hpp"
#include "bayesosc/cavity.hpp"
#include "bayesosc/config.hpp"
#include "bayesosc/csv.hpp"
#include "bayesosc/elastic_net.hpp"
#include "bayesosc/errors.hpp"
#include "bayesosc/gp_noise.hpp"
#include "bayesosc/tsplib.hpp"
#include "bayesosc/version.hpp"

namespace bayesosc::io {

struct RunArtifacts {
    std::vector<std::filesystem::path> csv_files;
    std::filesystem::path metadata_file;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(kModuleName, "cannot open " + path.string());
    out << content;
    if (!out) throw ValidationError(kModuleName, "failed writing " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(kModuleName, "cannot read " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

inline void run_search(const ExperimentConfig& config,
                       const std::filesystem::path& out_dir, RunArtifacts& artifacts) {
    const SearchCommand& p = *config.search;
    search::SimulationConfig sim;
    sim.n_cells = p.n_cells;
    sim.true_cell = p.true_cell;
    sim.model.p_detect = p.p_detect;
    sim.model.p_false = p.p_false;
    sim.policy.kind = p.policy == "greedy" ? search::PolicySpec::Kind::greedy
                                           : search::PolicySpec::Kind::brute_force;
    sim.policy.horizon = p.horizon;
    sim.max_steps = p.max_steps;
    sim.stop_threshold = p.stop_threshold;
    sim.seed = config.seed;
    sim.prior = p.prior;
    const search::TrajectoryRecord record = search::simulate_search(sim);

    CsvTable table({"step", "action", "observation", "entropy", "max_belief"});
    for (std::size_t i = 0; i < record.actions.size(); ++i)
        table.add_row({format_integer(static_cast<long long>(i)),
                       format_integer(record.actions[i].cell),
                       format_integer(record.observations[i].y),
                       format_number(record.entropies[i]),
                       format_number(record.beliefs[i].max_prob())});
    const auto path = out_dir / "search.csv";
    write_file(path, table.to_string());
    artifacts.csv_files.push_back(path);
}

inline void run_tsp(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                    RunArtifacts& artifacts) {
    const TspCommand& p = *config.tsp;
    const io::TsplibInstance instance = parse_tsplib(read_file(p.instance_path));

    net::ElasticNetParams params;
    params.alpha = p.alpha;
    params.beta = p.beta;
    params.node_ratio = p.node_ratio;
    net::AnnealSchedule schedule =
        net::AnnealSchedule::for_spread(net::instance_spread(instance.cities));
    if (p.k_start) schedule.k_start = *p.k_start;
    schedule.k_decay = p.k_decay;
    schedule.k_min = p.k_min;
    schedule.iters_per_stage = p.iters_per_stage;
    schedule.step_size = p.step_size;

    const net::SolveResult result =
        net::solve(instance.cities, params, schedule, config.seed);
    const net::Tour tour = net::extract_tour(result.nodes, instance.cities);

    CsvTable trace({"stage", "K", "prior_energy", "data_energy", "total_energy",
                    "tour_length"});
    for (const net::StageRecord& stage : result.trace)
        trace.add_row({format_integer(stage.stage), format_number(stage.k),
                       format_number(stage.prior), format_number(stage.data),
                       format_number(stage.total), format_number(stage.tour_len)});
    const auto trace_path = out_dir / "trace.csv";
    write_file(trace_path, trace.to_string());
    artifacts.csv_files.push_back(trace_path);

    CsvTable tour_table({"position", "city", "x", "y"});
    for (std::size_t i = 0; i < tour.order.size(); ++i) {
        const int city = tour.order[i];
        tour_table.add_row({format_integer(static_cast<long long>(i)),
                            format_integer(city),
                            format_number(instance.cities[city].position.x()),
                            format_number(instance.cities[city].position.y())});
    }
    const auto tour_path = out_dir / "tour.csv";
    write_file(tour_path, tour_table.to_string());
    artifacts.csv_files.push_back(tour_path);
}

inline std::vector<std::string> series_header(const cavity::CavityModel& model,
                                              const std::string& suffix) {
    std::vector<std::string> header = {"time"};
    for (int n = 0; n < model.d; ++n)
        header.push_back("pop_" + std::to_string(n) + suffix);
    for (std::size_t q = 0; q < model.qubits.size(); ++q)
        header.push_back("qubit_exc_" + std::to_string(q) + suffix);
    header.push_back("photon_number" + suffix);
    header.push_back("purity" + suffix);
    header.push_back("coherence_l1" + suffix);
    return header;
}

inline void run_qsim(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                     RunArtifacts& artifacts) {
    const QsimCommand& p = *config.qsim;
    cavity::CavityModel model;
    model.d = p.d;
    model.omega_r = p.omega_r;
    model.hbar = p.hbar;
    for (const QsimQubit& q : p.qubits)
        model.qubits.push_back(cavity::QubitSpec{q.delta, q.g});

    cavity::ResetProcess reset;
    reset.rate = p.rate;
    for (int t : p.targets) reset.targets.push_back(static_cast<std::size_t>(t));

    cavity::SimConfig sim;
    sim.dt = p.dt;
    sim.t_max = p.t_max;
    sim.seed = config.seed;
    sim.n_trajectories = p.n_trajectories;
    sim.record_stride = p.record_stride;
    sim.guard_truncation = p.guard_truncation;
    sim.truncation_threshold = p.truncation_threshold;

    std::vector<int> qubit_levels(p.initial_qubit_levels.begin(),
                                  p.initial_qubit_levels.end());
    const cavity::DensityMatrix rho0 = cavity::DensityMatrix::from_ket(
        cavity::basis_ket(model, p.initial_cavity_level, qubit_levels));

    auto emit_series = [&](const cavity::ObservableSeries& series,
                           const std::string& file_name) {
        CsvTable table(series_header(model, ""));
        for (std::size_t i = 0; i < series.size(); ++i) {
            std::vector<std::string> row = {format_number(series.times[i])};
            for (int n = 0; n < model.d; ++n)
                row.push_back(format_number(series.qudit_populations(i, n)));
            for (std::size_t q = 0; q < model.qubits.size(); ++q)
                row.push_back(format_number(
                    series.qubit_excitations(i, static_cast<Eigen::Index>(q))));
            row.push_back(format_number(series.photon_number[i]));
            row.push_back(format_number(series.purity[i]));
            row.push_back(format_number(series.coherence_l1[i]));
            table.add_row(std::move(row));
        }
        const auto path = out_dir / file_name;
        write_file(path, table.to_string());
        artifacts.csv_files.push_back(path);
    };

    if (p.mode == "trajectory") {
        emit_series(cavity::run_trajectory(model, reset, rho0, sim), "series.csv");
    } else if (p.mode == "mean") {
        emit_series(cavity::run_mean_evolution(model, reset, rho0, sim), "series.csv");
    } else {
        const cavity::EnsembleSeries ensemble =
            cavity::run_trajectory_ensemble(model, reset, rho0, sim);
        emit_series(ensemble.mean, "series.csv");
        CsvTable se_table(series_header(model, "_se"));
        for (std::size_t i = 0; i < ensemble.mean.size(); ++i) {
            std::vector<std::string> row = {format_number(ensemble.mean.times[i])};
            for (int n = 0; n < model.d; ++n)
                row.push_back(format_number(ensemble.populations_se(i, n)));
            for (std::size_t q = 0; q < model.qubits.size(); ++q)
                row.push_back(format_number(
                    ensemble.excitations_se(i, static_cast<Eigen::Index>(q))));
            row.push_back(format_number(ensemble.photon_se[i]));
            row.push_back(format_number(ensemble.purity_se[i]));
            row.push_back(format_number(ensemble.coherence_se[i]));
            se_table.add_row(std::move(row));
        }
        const auto se_path = out_dir / "series_se.csv";
        write_file(se_path, se_table.to_string());
        artifacts.csv_files.push_back(se_path);
    }
}

inline void run_noise(const ExperimentConfig& config,
                      const std::filesystem::path& out_dir, RunArtifacts& artifacts) {
    const NoiseCommand& p = *config.noise;
    gp::GPKernel kernel;
    kernel.kind = p.kernel == "white"              ? gp::KernelKind::white
                  : p.kernel == "ornstein_uhlenbeck" ? gp::KernelKind::ornstein_uhlenbeck
                                                     : gp::KernelKind::squared_exponential;
    kernel.variance = p.variance;
    kernel.correlation_time = p.correlation_time;
    const gp::TimeGrid grid{p.t0, p.dt, static_cast<std::size_t>(p.n)};

    const auto paths =
        gp::sample_paths(kernel, grid, static_cast<std::size_t>(p.count), config.seed);
    const gp::EmpiricalStats stats = gp::empirical_stats(paths);

    CsvTable stats_table({"t", "mean", "variance"});
    for (std::size_t i = 0; i < grid.n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        stats_table.add_row({format_number(grid.time(i)), format_number(stats.mean(k)),
                             format_number(stats.covariance(k, k))});
    }
    const auto stats_path = out_dir / "noise_stats.csv";
    write_file(stats_path, stats_table.to_string());
    artifacts.csv_files.push_back(stats_path);

    const std::vector<double> autocorr =
        gp::lag_autocorrelation(paths, static_cast<std::size_t>(p.max_lag));
    CsvTable corr_table({"lag", "time_lag", "autocorrelation"});
    for (std::size_t lag = 0; lag < autocorr.size(); ++lag)
        corr_table.add_row({format_integer(static_cast<long long>(lag)),
                            format_number(static_cast<double>(lag) * grid.dt),
                            format_number(autocorr[lag])});
    const auto corr_path = out_dir / "noise_autocorr.csv";
    write_file(corr_path, corr_table.to_string());
    artifacts.csv_files.push_back(corr_path);
}

}  // namespace detail

// Runs the configured experiment, writing artifacts under config.output_path.
inline RunArtifacts run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path out_dir(config.output_path);
    std::filesystem::create_directories(out_dir);

    RunArtifacts artifacts;
    if (config.search) {
        detail::run_search(config, out_dir, artifacts);
    } else if (config.tsp) {
        detail::run_tsp(config, out_dir, artifacts);
    } else if (config.qsim) {
        detail::run_qsim(config, out_dir, artifacts);
    } else if (config.noise) {
        detail::run_noise(config, out_dir, artifacts);
    } else {
        throw ValidationError(kModuleName, "config carries no command block");
    }

    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json metadata;
    metadata["command"] = config.command;
    metadata["seed"] = config.seed;
    metadata["tool_version"] = kVersion;
    metadata["wall_time_seconds"] = wall_seconds;
    metadata["config"] = nlohmann::json::parse(canonical_config_text(config));
    artifacts.metadata_file = out_dir / "metadata.json";
    detail::write_file(artifacts.metadata_file, metadata.dump(2) + "\n");
    return artifacts;
}

// Maps a thrown error to the CLI exit code and a class label for messages.
inline const char* error_class_name(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "configuration error";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation error";
    if (dynamic_cast<const ContradictionError*>(&e)) return "contradiction error";
    if (dynamic_cast<const SizeError*>(&e)) return "size error";
    if (dynamic_cast<const DivergenceError*>(&e)) return "divergence error";
    if (dynamic_cast<const ConditioningError*>(&e)) return "conditioning error";
    if (dynamic_cast<const TruncationError*>(&e)) return "truncation error";
    if (dynamic_cast<const InternalError*>(&e)) return "internal error";
    return "error";
}

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 3;
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const ContradictionError*>(&e)) return 4;
    if (dynamic_cast<const SizeError*>(&e)) return 5;
    if (dynamic_cast<const DivergenceError*>(&e)) return 6;
    if (dynamic_cast<const ConditioningError*>(&e)) return 7;
    if (dynamic_cast<const TruncationError*>(&e)) return 8;
    if (dynamic_cast<const InternalError*>(&e)) return 9;
    return 1;
}

}  // namespace bayesosc::io
