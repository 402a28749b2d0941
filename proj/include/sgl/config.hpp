#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgl/carleman.hpp"
#include "sgl/fixed_point.hpp"
#include "sgl/hum.hpp"
#include "sgl/nonlinearity.hpp"
#include "sgl/weights.hpp"

namespace sgl {

enum class ExperimentKind {
    simulate,
    forward_linear,
    backward_linear,
    forward_semilinear,
    backward_semilinear,
    carleman_sweep
};
ExperimentKind parse_experiment_kind(const std::string& name);  // throws ConfigError
std::string to_string(ExperimentKind kind);

// a11(t, x) = c0 + cx x + ct t
struct DiffusionSpec {
    double c0 = 1.0;
    double cx = 0.0;
    double ct = 0.0;
};

// Initial (forward) or terminal (backward) data and the optional source.
struct DataSpec {
    std::string kind = "sine";  // sine | random | zero
    int mode = 1;
    double amplitude = 1.0;
    std::string source = "none";  // none | random
    double source_amplitude = 1.0;
};

struct CarlemanSpec {
    std::string estimate = "random";
    std::vector<double> lambdas{4.0, 8.0, 16.0};
    std::vector<double> mus{1.0};
    int repetitions = 100;
};

struct ExperimentConfig {
    Geometry geometry;
    int n_interior = 31;
    int n_steps = 64;
    int n_b = 8;
    double a = 1.0;
    double b = 0.0;
    DiffusionSpec a11;
    double s0 = 1.0;
    WeightParams weights;  // lambda 4, mu 2, m 1, T 0.5
    std::vector<double> eps_list{1e-3};
    double cg_tol = 1e-8;
    int cg_max_iters = 500;
    NonlinearitySpec nonlinearity;
    PicardConfig picard;
    CarlemanSpec carleman;
    DataSpec data;
    ExperimentKind problem = ExperimentKind::forward_linear;
    std::uint64_t seed = 42;
    std::string output = "sgl_out";
    bool allow_nonconvergence = false;

    // Cross-module checks; throws ConfigError / ParameterError naming the rule.
    void validate() const;
    GLCoefficients coefficients() const;
    PenalizationConfig penalization(double eps) const;
};

// Strict JSON: unknown keys are rejected, parse errors carry line:column.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);
// Canonical JSON echo (every field, fixed key order).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace sgl
