// sgl: command line front end for the experiment runner.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sgl/config.hpp"
#include "sgl/errors.hpp"
#include "sgl/runner.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
    sub->add_option("--config", c.config, "JSON experiment config");
    if (with_seed) sub->add_option("--seed", c.seed, "overrides the config seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_flag("--quiet", c.quiet, "no console output");
}

sgl::ExperimentConfig load(const Common& c) {
    sgl::ExperimentConfig cfg = c.config.empty() ? sgl::ExperimentConfig{} : sgl::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output = c.out;
    cfg.validate();
    return cfg;
}

int run(const Common& c, sgl::ExperimentKind kind) {
    auto cfg = load(c);
    cfg.problem = kind;
    const auto m = sgl::run_experiment(cfg);
    if (!c.quiet) {
        std::cout << sgl::to_string(kind) << ": " << m.files.size() << " files in " << m.out_dir
                  << "\n";
        for (const auto& [k, v] : m.summary) std::cout << "  " << k << " = " << v << "\n";
        if (!m.error.empty()) std::cerr << "error: " << m.error << "\n";
        else if (!m.converged) std::cerr << "warning: not all solves converged\n";
    }
    return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Ginzburg-Landau controllability lab"};
    app.require_subcommand(1);

    struct Entry {
        const char* name;
        const char* help;
        sgl::ExperimentKind kind;
    };
    const Entry entries[] = {
        {"simulate", "uncontrolled forward simulation", sgl::ExperimentKind::simulate},
        {"control-forward", "penalized null control, forward equation",
         sgl::ExperimentKind::forward_linear},
        {"control-backward", "penalized null control, backward equation",
         sgl::ExperimentKind::backward_linear},
        {"carleman-sweep", "Carleman ratio sweep over lambda and mu",
         sgl::ExperimentKind::carleman_sweep},
        {"semilinear-forward", "Picard iteration, forward equation",
         sgl::ExperimentKind::forward_semilinear},
        {"semilinear-backward", "Picard iteration, backward equation",
         sgl::ExperimentKind::backward_semilinear},
    };
    Common common;
    std::optional<sgl::ExperimentKind> chosen;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, common);
        sub->callback([&chosen, kind = e.kind] { chosen = kind; });
    }

    auto* plot = app.add_subcommand("plot-data", "tidy CSVs from a finished run");
    add_common(plot, common, false);
    std::vector<std::string> selectors;
    plot->add_option("selector", selectors, "eps-trend | picard | carleman | weights")->required();

    auto* check = app.add_subcommand("validate-config", "parse and validate a config");
    add_common(check, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sgl::exit_config;
    }

    try {
        if (chosen) return run(common, *chosen);
        if (check->parsed()) {
            if (common.config.empty()) throw sgl::ConfigError("validate-config needs --config");
            const auto cfg = load(common);
            if (!common.quiet) std::cout << sgl::config_to_json(cfg) << "\n";
            return sgl::exit_ok;
        }
        if (plot->parsed()) {
            std::string dir = common.out;
            if (dir.empty()) dir = common.config.empty() ? "sgl_out" : sgl::load_config(common.config).output;
            const auto m = sgl::load_manifest(dir);
            for (const auto& s : selectors) {
                const auto p = sgl::emit_plot_data(m, s);
                if (!common.quiet) std::cout << p << "\n";
            }
            return sgl::exit_ok;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sgl::exit_code_for(e);
    }
    return sgl::exit_ok;
}
