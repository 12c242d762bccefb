// Command-line experiment runner: reads a JSON experiment configuration,
// dispatches to the search / tsp / qsim / noise engines, and writes CSV
// results plus a metadata sidecar. `batch` runs a list of configurations in
// parallel, each in its own subdirectory.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayesosc/config.hpp"
#include "bayesosc/runner.hpp"
#include "bayesosc/version.hpp"

namespace {

struct CommandOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw bayesosc::ValidationError(bayesosc::io::kModuleName,
                                        "cannot read config file " + path);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

int run_single(const std::string& subcommand, const CommandOptions& options) {
    bayesosc::io::ExperimentConfig config =
        bayesosc::io::parse_config(read_file_or_die(options.config_path));
    if (config.command != subcommand)
        throw bayesosc::ConfigError(
            bayesosc::io::kModuleName,
            {"config file declares command '" + config.command +
             "' but the '" + subcommand + "' subcommand was invoked"});
    if (options.seed) config.seed = *options.seed;
    if (!options.out_dir.empty()) config.output_path = options.out_dir;

    const bayesosc::io::RunArtifacts artifacts = bayesosc::io::run(config);
    if (!options.quiet) {
        for (const auto& path : artifacts.csv_files)
            std::cout << "wrote " << path.string() << '\n';
        std::cout << "wrote " << artifacts.metadata_file.string() << '\n';
    }
    return 0;
}

int run_batch(const CommandOptions& options) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(read_file_or_die(options.config_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw bayesosc::ConfigError(bayesosc::io::kModuleName,
                                    {std::string("JSON syntax: ") + e.what()});
    }
    if (!root.is_array() || root.empty())
        throw bayesosc::ConfigError(
            bayesosc::io::kModuleName,
            {"batch file must be a non-empty JSON array of experiment configs"});

    // Validate everything up front so a typo in config 7 doesn't waste the
    // first six runs.
    std::vector<bayesosc::io::ExperimentConfig> configs;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < root.size(); ++i) {
        try {
            configs.push_back(bayesosc::io::parse_config(root[i].dump()));
        } catch (const bayesosc::ConfigError& e) {
            for (const std::string& message : e.errors())
                problems.push_back("config[" + std::to_string(i) + "]: " + message);
        }
    }
    if (!problems.empty())
        throw bayesosc::ConfigError(bayesosc::io::kModuleName, std::move(problems));

    const std::filesystem::path batch_root(
        options.out_dir.empty() ? std::string("out") : options.out_dir);
    struct Outcome {
        bool ok = false;
        std::string message;
    };
    std::vector<std::future<Outcome>> futures;
    futures.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        bayesosc::io::ExperimentConfig config = configs[i];
        config.output_path =
            (batch_root / ("exp_" + std::to_string(i) + "_" + config.command)).string();
        futures.push_back(std::async(std::launch::async, [config]() {
            Outcome outcome;
            try {
                bayesosc::io::run(config);
                outcome.ok = true;
                outcome.message = config.output_path;
            } catch (const std::exception& e) {
                outcome.message = std::string(bayesosc::io::error_class_name(e)) + ": " +
                                  e.what();
            }
            return outcome;
        }));
    }

    int failures = 0;
    for (std::size_t i = 0; i < futures.size(); ++i) {
        const Outcome outcome = futures[i].get();
        if (!outcome.ok) ++failures;
        if (!options.quiet || !outcome.ok)
            std::cerr << "experiment " << i << (outcome.ok ? " ok: " : " FAILED: ")
                      << outcome.message << '\n';
    }
    return failures == 0 ? 0 : 1;
}

void add_common_options(CLI::App* sub, CommandOptions& options) {
    sub->add_option("--config", options.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", options.out_dir, "output directory (overrides output_path)");
    sub->add_flag("--quiet", options.quiet, "suppress artifact listing");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical workbench: search, tours, cavity dynamics, noise"};
    app.set_version_flag("--version", bayesosc::kVersion);
    app.require_subcommand(1);

    CommandOptions search_opts, tsp_opts, qsim_opts, noise_opts, batch_opts;
    struct Single {
        const char* name;
        const char* blurb;
        CommandOptions* options;
    };
    const std::vector<Single> singles = {
        {"search", "Bayes-filter target search with entropy-greedy probing", &search_opts},
        {"tsp", "elastic-net tour construction on a TSPLIB instance", &tsp_opts},
        {"qsim", "qudit cavity with sporadically reset qubits", &qsim_opts},
        {"noise", "Gaussian-process signal sampling statistics", &noise_opts},
    };
    for (const Single& single : singles) {
        CLI::App* sub = app.add_subcommand(single.name, single.blurb);
        add_common_options(sub, *single.options);
        sub->add_option("--seed", single.options->seed, "override the config seed");
    }
    CLI::App* batch =
        app.add_subcommand("batch", "run a JSON array of configs in parallel");
    add_common_options(batch, batch_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        for (const Single& single : singles)
            if (app.got_subcommand(single.name)) return run_single(single.name, *single.options);
        return run_batch(batch_opts);
    } catch (const std::exception& e) {
        std::cerr << bayesosc::io::error_class_name(e) << ": " << e.what() << '\n';
        return bayesosc::io::exit_code_for(e);
    }
}
