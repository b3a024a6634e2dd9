#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace rmt::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Experiment name (snake_case) plus a flat key=value parameter map.
struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> parameters;
};

/// Snake-case names of all experiments, in CLI order.
std::vector<std::string> experiment_names();
/// "cauchy-law" <-> "cauchy_law".
std::string subcommand_of(const std::string& experiment);
std::string experiment_of(const std::string& subcommand);

/// Default value of every key an experiment accepts (seed has none).
std::map<std::string, std::string> experiment_defaults(const std::string& experiment);

/// Parses "key=value" lines; blank lines and '#' comments are skipped.
/// Throws ConfigError on a line without '=' or with an empty key.
std::map<std::string, std::string> parse_key_values(const std::string& text);
/// Reads a config file; an `experiment` key, if present, fills the name.
ExperimentConfig load_config_file(const std::string& path);

/// Fills defaults and validates: known experiment, no unknown keys, seed
/// present, numeric keys parse. Throws ConfigError.
ExperimentConfig resolve(const ExperimentConfig& config);

struct OutputRecord {
    std::string file;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version = kVersion;
    std::string started;  // UTC, ISO 8601
    double wall_time = 0.0;
    std::string out_dir;
    std::vector<OutputRecord> outputs;
    nlohmann::json results;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Runs one experiment, writes its CSV/JSON outputs and manifest.json under
/// the `out_dir` parameter. Library errors propagate unchanged.
RunManifest run(const ExperimentConfig& config);

/// Writes plot.gp next to the outputs and returns its path. Throws
/// InputError if the manifest lists no outputs or a listed file is missing.
std::string emit_plot_script(const RunManifest& manifest);

std::string sha256_hex(const std::string& data);

/// {"error": {"kind", "message", "experiment"}}.
nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::string& experiment);

}  // namespace rmt::cli
