#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgl/config.hpp"
#include "sgl/errors.hpp"
#include "sgl/hum.hpp"
#include "sgl/runner.hpp"
#include "sgl/spde_solvers.hpp"
#include "sgl/weights.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

sgl::ExperimentConfig config_from(const std::string& text) {
    auto cfg = sgl::parse_config(text, "<python>");
    cfg.validate();
    return cfg;
}

py::dict manifest_dict(const sgl::RunManifest& m) {
    py::dict summary;
    for (const auto& [k, v] : m.summary) summary[py::str(k)] = v;
    return py::dict("out_dir"_a = m.out_dir, "problem"_a = sgl::to_string(m.problem),
                    "files"_a = m.files, "summary"_a = summary, "converged"_a = m.converged,
                    "error"_a = m.error, "exit_code"_a = m.exit_code);
}

py::dict terms_dict(const sgl::CostTerms& c) {
    return py::dict("state"_a = c.state, "control_h"_a = c.control_h, "control_H"_a = c.control_H,
                    "endpoint"_a = c.endpoint, "total"_a = c.total());
}

py::array_t<double> energy(const sgl::AdaptedField& y, const sgl::SpdeModel& m) {
    py::array_t<double> out(m.steps() + 1);
    auto r = out.mutable_unchecked<1>();
    for (int k = 0; k <= m.steps(); ++k) r(k) = sgl::expected_l2_sq_at(y, k, m.spatial_grid());
    return out;
}

py::array_t<double> times(const sgl::TimeGrid& tg) {
    py::array_t<double> t(tg.steps() + 1);
    auto r = t.mutable_unchecked<1>();
    for (int k = 0; k <= tg.steps(); ++k) r(k) = tg.t(k);
    return t;
}

py::dict run(const std::string& text, std::optional<std::string> problem,
             std::optional<std::uint64_t> seed, std::optional<std::string> out) {
    auto cfg = sgl::parse_config(text, "<python>");
    if (problem) cfg.problem = sgl::parse_experiment_kind(*problem);
    if (seed) cfg.seed = *seed;
    if (out) cfg.output = *out;
    sgl::RunManifest m;
    {
        py::gil_scoped_release nogil;
        m = sgl::run_experiment(cfg);
    }
    return manifest_dict(m);
}

py::dict weights(const std::string& text, const std::string& variant, double eps) {
    const auto cfg = config_from(text);
    const auto model = sgl::make_model(cfg);
    sgl::WeightVariant v;
    if (variant == "forward") v = sgl::WeightVariant::forward();
    else if (variant == "backward") v = sgl::WeightVariant::backward();
    else if (variant == "forward-eps") v = sgl::WeightVariant::forward_eps(eps);
    else if (variant == "backward-eps") v = sgl::WeightVariant::backward_eps(eps);
    else throw sgl::ConfigError("unknown weight variant '" + variant + "'");
    const auto ws = sgl::build_weight_set(sgl::build_beta(model.geometry(), model.spatial_grid()),
                                          model.geometry(), cfg.weights, model.spatial_grid(),
                                          model.time_grid(), v);
    const int N = model.steps(), n = model.n();
    py::array_t<double> x(n), gamma(N + 1), log_theta({N + 1, n}), log_xi({N + 1, n});
    auto rx = x.mutable_unchecked<1>();
    auto rg = gamma.mutable_unchecked<1>();
    auto rt = log_theta.mutable_unchecked<2>();
    auto rxi = log_xi.mutable_unchecked<2>();
    for (int i = 0; i < n; ++i) rx(i) = model.spatial_grid().x(i);
    for (int k = 0; k <= N; ++k) {
        rg(k) = ws.gamma(k);
        for (int i = 0; i < n; ++i) {
            rt(k, i) = ws.log_theta(k, i);
            rxi(k, i) = ws.log_xi(k, i);
        }
    }
    return py::dict("t"_a = times(model.time_grid()), "x"_a = x, "gamma"_a = gamma,
                    "log_theta"_a = log_theta, "log_xi"_a = log_xi);
}

py::dict control(const std::string& text, bool forward, std::optional<double> eps) {
    const auto cfg = config_from(text);
    const auto model = sgl::make_model(cfg);
    const double e = eps.value_or(cfg.eps_list.front());
    const auto data = sgl::make_data(cfg, model.spatial_grid());
    const auto F = sgl::make_source(cfg, model);
    sgl::HumSolution s;
    double defect = 0.0;
    {
        py::gil_scoped_release nogil;
        if (forward) {
            sgl::ForwardHum hum(model, cfg.weights, cfg.penalization(e));
            s = hum.solve(data, F);
            defect = hum.duality(s, data, F).defect;
        } else {
            sgl::BackwardHum hum(model, cfg.weights, cfg.penalization(e));
            const sgl::BackwardData bd{{data}, F, {}};
            s = hum.solve(bd);
            defect = hum.duality(s, bd).defect;
        }
    }
    return py::dict("eps"_a = e, "cost"_a = terms_dict(s.cost),
                    "endpoint_residual"_a = s.endpoint_residual, "iterations"_a = s.iterations,
                    "converged"_a = s.converged, "duality_defect"_a = defect,
                    "J_history"_a = s.J_history, "t"_a = times(model.time_grid()),
                    "energy"_a = energy(s.y, model));
}

py::dict simulate(const std::string& text) {
    const auto cfg = config_from(text);
    const auto model = sgl::make_model(cfg);
    sgl::ForwardData d;
    d.y0 = sgl::make_data(cfg, model.spatial_grid());
    d.F = sgl::make_source(cfg, model);
    d.nl = cfg.nonlinearity;
    const auto y = sgl::solve_forward(model, d);
    return py::dict("t"_a = times(model.time_grid()), "energy"_a = energy(y, model));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stochastic Ginzburg-Landau controllability lab";
    m.attr("artifact_version") = sgl::kArtifactVersion;

    py::register_exception<sgl::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<sgl::ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<sgl::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<sgl::DimensionError>(m, "DimensionError", PyExc_ValueError);
    auto numerical = py::register_exception<sgl::NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<sgl::SaturationError>(m, "SaturationError", numerical.ptr());

    m.def("validate_config", [](const std::string& text) { return sgl::config_to_json(config_from(text)); },
          "text"_a, "Parse and validate a JSON config; returns the canonical echo.");
    m.def("load_config", [](const std::string& path) {
        auto cfg = sgl::load_config(path);
        cfg.validate();
        return sgl::config_to_json(cfg);
    }, "path"_a);
    m.def("run", &run, "config"_a, "problem"_a = py::none(), "seed"_a = py::none(),
          "out"_a = py::none(), "Run a pipeline and return its manifest as a dict.");
    m.def("load_manifest", [](const std::string& dir) { return manifest_dict(sgl::load_manifest(dir)); },
          "out_dir"_a);
    m.def("plot_data", [](const std::string& dir, const std::string& selector) {
        return sgl::emit_plot_data(sgl::load_manifest(dir), selector);
    }, "out_dir"_a, "selector"_a);
    m.def("plot_selectors", &sgl::plot_selectors);
    m.def("derive_seed", &sgl::derive_seed, "seed"_a, "component"_a);
    m.def("weights", &weights, "config"_a, "variant"_a = "forward", "eps"_a = 0.0,
          "Weight grids on (time node, interior node).");
    m.def("control_forward", [](const std::string& c, std::optional<double> e) { return control(c, true, e); },
          "config"_a, "eps"_a = py::none());
    m.def("control_backward", [](const std::string& c, std::optional<double> e) { return control(c, false, e); },
          "config"_a, "eps"_a = py::none());
    m.def("simulate", &simulate, "config"_a, "Uncontrolled forward run; expected energy per time node.");
}
