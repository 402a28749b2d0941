#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sgl/config.hpp"

namespace sgl {

inline constexpr const char* kArtifactVersion = "1";

// Exit codes shared by the runner and the CLI.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_nonconvergence = 4
};

struct RunManifest {
    std::string out_dir;
    ExperimentKind problem = ExperimentKind::forward_linear;
    std::string config_json;          // canonical echo
    std::vector<std::string> files;   // relative to out_dir, in write order
    std::vector<std::pair<std::string, double>> summary;
    bool converged = true;
    std::string error;                // empty on success
    int exit_code = exit_ok;

    double metric(const std::string& name) const;  // throws ConfigError when absent
};

// Sub-seed of the run seed for a named component (data, source, carleman, probe).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& component);

// Pieces of a run built from the config: the model, the initial or terminal
// data and the optional random source (empty when data.source is "none").
SpdeModel make_model(const ExperimentConfig& cfg);
ComplexField make_data(const ExperimentConfig& cfg, const SpatialGrid& grid);
AdaptedField make_source(const ExperimentConfig& cfg, const SpdeModel& model);

// Runs the configured pipeline into cfg.output. Module errors are caught and
// recorded; manifest.json is written last in every case.
RunManifest run_experiment(const ExperimentConfig& cfg);

// Reads <dir>/manifest.json back.
RunManifest load_manifest(const std::string& dir);

std::vector<std::string> plot_selectors();
// Writes plot_<selector>.csv into the run directory and returns its path.
// Unknown selector: ConfigError listing the available ones.
std::string emit_plot_data(const RunManifest& manifest, const std::string& selector);

// Maps an exception thrown by the library to an exit code (2 or 3).
int exit_code_for(const std::exception& e) noexcept;

}  // namespace sgl
