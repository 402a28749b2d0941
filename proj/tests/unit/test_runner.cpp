#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sgl/config.hpp"
#include "sgl/errors.hpp"
#include "sgl/runner.hpp"

using namespace sgl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sgl_runner_" + name);
    fs::remove_all(p);
    return p;
}

const char* kSmall = R"({
  "grid": {"n_interior": 9, "n_steps": 16, "n_b": 2},
  "weights": {"lambda": 2, "mu": 1, "offset_override": -4.0, "alpha_gap_override": 1.5,
              "sigma_override": 2.0},
  "penalization": {"eps_list": [0.01, 0.001]}
})";

ExperimentConfig small(const std::string& out) {
    auto c = parse_config(kSmall);
    c.output = scratch(out).string();
    return c;
}

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
    auto c = parse_config("{}");
    CHECK(c.n_interior == 31);
    CHECK(c.n_steps == 64);
    CHECK(c.n_b == 8);
    CHECK(c.weights.lambda == 4.0);
    CHECK(c.weights.mu == 2.0);
    CHECK(c.weights.m == 1);
    CHECK(c.weights.T == 0.5);
    REQUIRE(c.eps_list.size() == 1);
    CHECK(c.eps_list[0] == 1e-3);
    CHECK(c.seed == 42u);
    CHECK(c.problem == ExperimentKind::forward_linear);
}

TEST_CASE("config validation messages") {
    CHECK(message_of(R"({"weights": {"T": 1.2}})") == "T must lie in (0,1)");
    CHECK(message_of(R"({"nois_steps": 3})").find("'nois_steps'") != std::string::npos);
    CHECK(message_of(R"({"grid": {"nois_steps": 3}})").find("'grid.nois_steps'") != std::string::npos);
    CHECK(message_of("{\n  \"seed\": 1,\n}").find("<string>:3:1") != std::string::npos);
    CHECK(message_of(R"({"grid": {"n_steps": 30}})").find("multiple of 4") != std::string::npos);
    CHECK(message_of(R"({"grid": {"n_steps": 36, "n_b": 8}})").find("divisible by grid.n_b") !=
          std::string::npos);
    CHECK(message_of(R"({"grid": {"n_interior": 4.5}})").find("integer") != std::string::npos);
    CHECK(message_of(R"({"geometry": {"gprime": [0.2, 0.6]}})") != "");
    CHECK(message_of(R"({"weights": {"sigma_override": 1.5}})") != "");
    CHECK(message_of(R"({"problem": "sideways"})").find("unknown problem") != std::string::npos);
    CHECK(message_of(R"({"penalization": {"eps": 0.01, "eps_list": [0.1]}})") != "");
    CHECK(message_of(R"({"coefficients": {"a11": 0.5}})").find("ellipticity") != std::string::npos);
    CHECK_THROWS_AS(parse_config(R"({"seed": -3})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/sgl.json"), ConfigError);
}

TEST_CASE("config echo parses back to the same config") {
    auto c = parse_config(R"({"problem": "backward-semilinear", "seed": 18446744073709551615,
                              "nonlinearity": {"kind": "saturated", "kappa2": 0.5},
                              "coefficients": {"a11": {"c0": 1.2, "cx": 0.3}}})");
    CHECK(c.seed == 18446744073709551615ull);
    const auto echo = config_to_json(c);
    CHECK(config_to_json(parse_config(echo)) == echo);
}

TEST_CASE("sub-seeds are deterministic and component specific") {
    CHECK(derive_seed(42, "data") == derive_seed(42, "data"));
    CHECK(derive_seed(42, "data") != derive_seed(42, "source"));
    CHECK(derive_seed(42, "data") != derive_seed(43, "data"));
}

TEST_CASE("zero data gives a zero cost and one report per eps") {
    auto c = small("zero");
    c.data.kind = "zero";
    auto m = run_experiment(c);
    CHECK(m.exit_code == 0);
    CHECK(m.error.empty());
    CHECK(m.metric("J") == 0.0);
    CHECK(m.metric("J_eps_0") == 0.0);
    for (const char* f : {"hum_eps_0.json", "hum_eps_1.json", "eps_trend.csv", "weights.csv"})
        CHECK(std::find(m.files.begin(), m.files.end(), f) != m.files.end());
    for (const auto& f : m.files) CHECK(fs::file_size(fs::path(m.out_dir) / f) > 0);
    CHECK(fs::exists(fs::path(m.out_dir) / "manifest.json"));
}

TEST_CASE("same config and seed give identical bytes") {
    auto a = small("det_a");
    a.data.kind = "random";
    a.data.source = "random";
    auto b = a;
    b.output = scratch("det_b").string();
    auto ma = run_experiment(a), mb = run_experiment(b);
    REQUIRE(ma.files == mb.files);
    for (const auto& f : ma.files)
        CHECK_MESSAGE(slurp(fs::path(ma.out_dir) / f) == slurp(fs::path(mb.out_dir) / f), f);

    auto c = a;
    c.output = scratch("det_c").string();
    c.seed = 7;
    auto mc = run_experiment(c);
    CHECK(slurp(fs::path(ma.out_dir) / "eps_trend.csv") != slurp(fs::path(mc.out_dir) / "eps_trend.csv"));
}

TEST_CASE("plot selectors") {
    auto c = small("plots");
    auto m = run_experiment(c);
    REQUIRE(m.exit_code == 0);
    auto loaded = load_manifest(m.out_dir);
    CHECK(loaded.files == m.files);
    CHECK(loaded.metric("J") == m.metric("J"));

    auto p = emit_plot_data(loaded, "eps-trend");
    const auto text = slurp(p);
    CHECK(text.rfind("eps,residual,cost_total\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    auto w = emit_plot_data(loaded, "weights");
    CHECK(slurp(w).rfind("t,x,gamma,phi,xi,log_theta\n", 0) == 0);
    CHECK_THROWS_AS(emit_plot_data(loaded, "picard"), ConfigError);
    try {
        emit_plot_data(loaded, "nope");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("eps-trend, picard, carleman, weights") != std::string::npos);
    }
}

TEST_CASE("non-convergence and module errors map to exit codes") {
    auto c = small("cap");
    c.cg_max_iters = 1;
    c.cg_tol = 1e-14;
    auto m = run_experiment(c);
    CHECK_FALSE(m.converged);
    CHECK(m.exit_code == exit_nonconvergence);
    c.allow_nonconvergence = true;
    c.output = scratch("cap_ok").string();
    CHECK(run_experiment(c).exit_code == exit_ok);

    auto s = small("sat");
    s.weights = WeightParams{};
    s.weights.lambda = 8;
    s.weights.mu = 4;
    auto ms = run_experiment(s);
    CHECK(ms.exit_code == exit_numerical);
    CHECK_FALSE(ms.error.empty());
    CHECK(fs::exists(fs::path(ms.out_dir) / "manifest.json"));
}

TEST_CASE("semilinear and sweep pipelines") {
    auto c = small("semi");
    c.problem = ExperimentKind::forward_semilinear;
    c.nonlinearity.kind = NonlinearKind::linear;
    c.nonlinearity.kappa = 2.0;
    auto m = run_experiment(c);
    CHECK(m.exit_code == 0);
    auto p = emit_plot_data(m, "picard");
    CHECK(slurp(p).rfind("eps_index,iteration,increment,factor\n", 0) == 0);

    auto s = small("sweep");
    s.problem = ExperimentKind::carleman_sweep;
    s.carleman.lambdas = {2, 4};
    s.carleman.repetitions = 4;
    auto ms = run_experiment(s);
    CHECK(ms.exit_code == 0);
    CHECK(slurp(emit_plot_data(ms, "carleman")).rfind("lambda,mu,ratio_median,ratio_max\n", 0) == 0);

    auto sim = small("sim");
    sim.problem = ExperimentKind::simulate;
    auto mm = run_experiment(sim);
    CHECK(mm.exit_code == 0);
    CHECK(mm.metric("initial_l2_sq") > mm.metric("terminal_l2_sq"));
}
