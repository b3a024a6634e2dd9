// rmtlab: command-line runner for the resolvent experiments.
//
//   rmtlab cauchy-law --seed 1 --out out/fig1 n=5000
//   rmtlab run --config fig2.cfg --plot

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmt/error.hpp"
#include "rmt/experiments.hpp"
#include "rmt/platform.hpp"

namespace {

struct Common {
    std::string seed;
    std::string threads;
    std::string out;
    std::string config;
    std::vector<std::string> overrides;
    bool plot = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "RNG seed (mandatory, here or in the config)");
    cmd->add_option("--threads", c.threads, "worker threads (default 1)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--config", c.config, "key=value config file");
    cmd->add_flag("--plot", c.plot, "also write plot.gp");
    cmd->add_option("overrides", c.overrides, "key=value parameter overrides");
}

int execute(const std::string& experiment, const Common& c) {
    rmt::cli::ExperimentConfig cfg;
    if (!c.config.empty()) cfg = rmt::cli::load_config_file(c.config);
    if (!experiment.empty()) {
        if (!cfg.experiment.empty() && cfg.experiment != experiment) {
            throw rmt::ConfigError("config file is for experiment " + cfg.experiment);
        }
        cfg.experiment = experiment;
    }
    if (cfg.experiment.empty()) throw rmt::ConfigError("no experiment given (set experiment= in the config)");
    for (const auto& kv : c.overrides) {
        for (const auto& [k, v] : rmt::cli::parse_key_values(kv)) cfg.parameters[k] = v;
    }
    if (!c.seed.empty()) cfg.parameters["seed"] = c.seed;
    if (!c.threads.empty()) cfg.parameters["threads"] = c.threads;
    if (!c.out.empty()) cfg.parameters["out_dir"] = c.out;

    const auto manifest = rmt::cli::run(cfg);
    nlohmann::json summary = {{"experiment", cfg.experiment},
                              {"out_dir", manifest.out_dir},
                              {"wall_time_s", manifest.wall_time},
                              {"results", manifest.results}};
    if (c.plot) summary["plot_script"] = rmt::cli::emit_plot_script(manifest);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    rmt::ensure_reliable_blas(argc, argv);

    CLI::App app{"Resolvent statistics of random matrices: experiment runner"};
    app.set_version_flag("--version", std::string(rmt::cli::kVersion));
    app.require_subcommand(1);

    Common common;
    std::string chosen;
    for (const auto& name : rmt::cli::experiment_names()) {
        auto* cmd = app.add_subcommand(rmt::cli::subcommand_of(name), "run the " + name + " experiment");
        add_common(cmd, common);
        cmd->callback([&chosen, name] { chosen = name; });
    }
    auto* run = app.add_subcommand("run", "run the experiment named in --config");
    add_common(run, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << rmt::cli::error_json("usage", e.what(), "").dump() << '\n';
        return 2;
    }

    try {
        return execute(chosen, common);
    } catch (const rmt::Error& e) {
        std::cout << rmt::cli::error_json(e.kind(), e.what(), chosen).dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cout << rmt::cli::error_json("internal", e.what(), chosen).dump() << '\n';
        return 1;
    }
}
