#include "sgl/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sgl/errors.hpp"
#include "sgl/io.hpp"

namespace sgl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

double RunManifest::metric(const std::string& name) const {
    for (const auto& [k, v] : summary)
        if (k == name) return v;
    throw ConfigError("manifest has no summary metric '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& component) {
    // FNV-1a of the component name, mixed with the run seed
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : component) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e))
        return exit_config;
    return exit_numerical;
}

SpdeModel make_model(const ExperimentConfig& c) {
    const auto& g = c.geometry;
    return SpdeModel(SpatialGrid(g.domain_left, g.domain_right, c.n_interior),
                     TimeGrid(c.weights.T, c.n_steps), c.n_b, c.coefficients(), g);
}

ComplexField make_data(const ExperimentConfig& c, const SpatialGrid& grid) {
    ComplexField y(grid.size());
    const auto& d = c.data;
    if (d.kind == "sine") {
        const double L = grid.right() - grid.left();
        for (int i = 0; i < grid.size(); ++i)
            y[i] = d.amplitude * std::sin(d.mode * std::numbers::pi * (grid.x(i) - grid.left()) / L);
    } else if (d.kind == "random") {
        std::mt19937_64 rng(derive_seed(c.seed, "data"));
        std::normal_distribution<double> nd;
        for (auto& v : y) v = d.amplitude * Complex(nd(rng), nd(rng));
    }
    return y;
}

AdaptedField make_source(const ExperimentConfig& c, const SpdeModel& model) {
    if (c.data.source == "none") return {};
    AdaptedField F = model.field();
    std::mt19937_64 rng(derive_seed(c.seed, "source"));
    std::normal_distribution<double> nd;
    for (auto& v : F.raw()) v = c.data.source_amplitude * Complex(nd(rng), nd(rng));
    return F;
}

namespace {

std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json num(double v) { return std::isfinite(v) ? json(v) : json(fmt_double(v)); }

class Run {
public:
    Run(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.output) {
        fs::create_directories(dir_);
        log_.open(dir_ / "run.log");
        log_ << "start " << now_iso() << "\n";
        man_.out_dir = dir_.string();
        man_.problem = cfg.problem;
        man_.config_json = config_to_json(cfg);
    }

    std::string path(const std::string& name) {
        man_.files.push_back(name);
        return (dir_ / name).string();
    }
    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path(name));
        out << j.dump(2) << "\n";
    }
    void metric(const std::string& k, double v) { man_.summary.emplace_back(k, v); }
    void note(const std::string& s) { log_ << s << "\n"; }
    void nonconverged(const std::string& what) {
        man_.converged = false;
        note("not converged: " + what);
    }

    RunManifest finish() {
        if (man_.exit_code == exit_ok && !man_.converged && !cfg_.allow_nonconvergence)
            man_.exit_code = exit_nonconvergence;
        log_ << "end " << now_iso() << " exit " << man_.exit_code << "\n";
        json j;
        j["artifact_version"] = kArtifactVersion;
        j["problem"] = to_string(man_.problem);
        j["config"] = json::parse(man_.config_json);
        j["log"] = "run.log";
        j["files"] = man_.files;
        json s = json::object();
        for (const auto& [k, v] : man_.summary) s[k] = num(v);
        j["summary"] = s;
        j["converged"] = man_.converged;
        j["error"] = man_.error;
        j["exit_code"] = man_.exit_code;
        std::ofstream out(dir_ / "manifest.json");
        out << j.dump(2) << "\n";
        return man_;
    }

    void fail(const std::exception& e) {
        man_.error = e.what();
        man_.exit_code = exit_code_for(e);
        note(std::string("error: ") + e.what());
    }

    const ExperimentConfig& cfg() const { return cfg_; }

private:
    const ExperimentConfig& cfg_;
    fs::path dir_;
    std::ofstream log_;
    RunManifest man_;
};

// Rows (node, k, t, x, re, im) over the slots each node owns.
void write_field_csv(const AdaptedField& f, const SpatialGrid& grid, const std::string& p) {
    CsvWriter csv(p, {"node", "k", "t", "x", "re", "im"});
    const auto& lay = f.layout();
    const auto& tg = lay.time_grid();
    for (int node = 0; node < lay.tree().node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k) {
            const auto v = f.at(node, k);
            for (int i = 0; i < grid.size(); ++i)
                csv.row({double(node), double(k), tg.t(k), grid.x(i), v[i].real(), v[i].imag()});
        }
    }
}

json cost_json(const CostTerms& c) {
    return {{"state", num(c.state)},
            {"control_h", num(c.control_h)},
            {"control_H", num(c.control_H)},
            {"endpoint", num(c.endpoint)},
            {"total", num(c.total())}};
}

json report_json(const CostReport& r) {
    json lhs = json::object(), rhs = json::object();
    for (const auto& [k, v] : r.lhs) lhs[k] = num(v);
    for (const auto& [k, v] : r.rhs) rhs[k] = num(v);
    return {{"lhs", lhs}, {"rhs", rhs}, {"lhs_total", num(r.lhs_total)},
            {"rhs_total", num(r.rhs_total)}, {"ratio", num(r.ratio)}};
}

json hum_json(const HumSolution& s, bool forward, const DualityReport& d, const CostReport& r) {
    json j;
    j["eps"] = s.eps;
    j["J_terms"] = cost_json(s.cost);
    j[forward ? "terminal_residual" : "initial_residual"] = num(s.endpoint_residual);
    j["optimality_defect"] = {{"h", num(s.defect_h)}, {"H", num(s.defect_H)}};
    j["control_scale"] = num(s.control_scale);
    j["duality"] = {{"lhs", num(d.lhs)}, {"rhs", num(d.rhs)}, {"defect", num(d.defect)}};
    j["duality_defect"] = num(d.defect);
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["gradient_relative"] = num(s.grad_rel);
    json hist = json::array();
    for (double v : s.J_history) hist.push_back(num(v));
    j["J_history"] = hist;
    j["cost_report"] = report_json(r);
    return j;
}

json trace_json(const PicardTrace& t) {
    json inc = json::array(), fac = json::array(), nrm = json::array();
    for (double v : t.increments) inc.push_back(num(v));
    for (double v : t.factors) fac.push_back(num(v));
    for (double v : t.source_norms) nrm.push_back(num(v));
    return {{"iterations", t.iterations}, {"converged", t.converged}, {"increments", inc},
            {"factors", fac}, {"source_norms", nrm}};
}

void write_trace_csv(const PicardTrace& t, const std::string& p) {
    CsvWriter csv(p, {"iteration", "increment", "factor", "source_norm"});
    for (std::size_t i = 0; i < t.increments.size(); ++i)
        csv.row({double(i + 1), t.increments[i], i > 0 ? t.factors[i - 1] : std::nan(""),
                 t.source_norms[i]});
}

struct TrendRow {
    double eps, residual, cost_total, iterations, converged, duality_defect, ratio;
};

void write_trend(Run& run, const std::vector<TrendRow>& rows) {
    CsvWriter csv(run.path("eps_trend.csv"), {"eps", "residual", "residual_over_eps", "cost_total",
                                               "iterations", "converged", "duality_defect",
                                               "cost_ratio"});
    for (const auto& r : rows)
        csv.row({r.eps, r.residual, r.residual / r.eps, r.cost_total, r.iterations, r.converged,
                 r.duality_defect, r.ratio});
}

std::string tag(std::size_t i) { return "eps_" + std::to_string(i); }

void run_simulate(Run& run, const SpdeModel& model) {
    const auto& c = run.cfg();
    ForwardData data{make_data(c, model.spatial_grid()), make_source(c, model), c.nonlinearity};
    AdaptedField y = solve_forward(model, data);
    if (!y.all_finite()) throw NumericalError("simulate: non-finite state");
    write_field_csv(y, model.spatial_grid(), run.path("trajectory.csv"));
    CsvWriter csv(run.path("energy.csv"), {"t", "expected_l2_sq"});
    for (int k = 0; k <= model.steps(); ++k)
        csv.row({model.time_grid().t(k), expected_l2_sq_at(y, k, model.spatial_grid())});
    run.metric("initial_l2_sq", expected_l2_sq_at(y, 0, model.spatial_grid()));
    run.metric("terminal_l2_sq", expected_l2_sq_at(y, model.steps(), model.spatial_grid()));
}

void run_forward(Run& run, const SpdeModel& model, bool semilinear) {
    const auto& c = run.cfg();
    const ComplexField y0 = make_data(c, model.spatial_grid());
    const AdaptedField F = semilinear ? AdaptedField{} : make_source(c, model);
    std::vector<TrendRow> trend;
    bool weights_written = false;
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
        ForwardHum hum(model, c.weights, c.penalization(c.eps_list[i]));
        if (!weights_written) {
            write_weights_csv(hum.weights(), run.path("weights.csv"));
            weights_written = true;
        }
        HumSolution s;
        AdaptedField src = F;
        if (semilinear) {
            auto res = picard_forward(hum, y0, c.nonlinearity, c.picard);
            run.write_json("picard_" + tag(i) + ".json", trace_json(res.trace));
            write_trace_csv(res.trace, run.path("picard_" + tag(i) + ".csv"));
            run.metric("picard_iterations_" + tag(i), res.trace.iterations);
            if (!res.trace.converged) run.nonconverged("picard at eps " + fmt_double(c.eps_list[i]));
            s = std::move(res.solution);
            src = std::move(res.trace.final_source);
        } else {
            s = hum.solve(y0, F);
        }
        const auto d = hum.duality(s, y0, src);
        const auto r = hum.cost_report(s, y0, src);
        run.write_json("hum_" + tag(i) + ".json", hum_json(s, true, d, r));
        write_field_csv(s.controls.h, model.spatial_grid(), run.path("controls_h_" + tag(i) + ".csv"));
        if (!s.controls.H.empty())
            write_field_csv(s.controls.H, model.spatial_grid(),
                            run.path("controls_H_" + tag(i) + ".csv"));
        if (!s.converged) run.nonconverged("cg at eps " + fmt_double(s.eps));
        run.metric("J_" + tag(i), s.cost.total());
        run.metric("terminal_residual_" + tag(i), s.endpoint_residual);
        trend.push_back({s.eps, s.endpoint_residual, s.cost.total(), double(s.iterations),
                         s.converged ? 1.0 : 0.0, d.defect, r.ratio});
    }
    write_trend(run, trend);
    run.metric("J", trend.back().cost_total);
    run.metric("residual", trend.back().residual);
}

void run_backward(Run& run, const SpdeModel& model, bool semilinear) {
    const auto& c = run.cfg();
    BackwardData data{{make_data(c, model.spatial_grid())},
                      semilinear ? AdaptedField{} : make_source(c, model), {}};
    std::vector<TrendRow> trend;
    bool weights_written = false;
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
        BackwardHum hum(model, c.weights, c.penalization(c.eps_list[i]));
        if (!weights_written) {
            write_weights_csv(hum.weights(), run.path("weights.csv"));
            weights_written = true;
        }
        HumSolution s;
        BackwardData used = data;
        if (semilinear) {
            auto res = picard_backward(hum, data, c.nonlinearity, c.picard);
            run.write_json("picard_" + tag(i) + ".json", trace_json(res.trace));
            write_trace_csv(res.trace, run.path("picard_" + tag(i) + ".csv"));
            run.metric("picard_iterations_" + tag(i), res.trace.iterations);
            if (!res.trace.converged) run.nonconverged("picard at eps " + fmt_double(c.eps_list[i]));
            s = std::move(res.solution);
            used.F = std::move(res.trace.final_source);
        } else {
            s = hum.solve(data);
        }
        const auto d = hum.duality(s, used);
        const auto r = hum.cost_report(s, used);
        run.write_json("hum_" + tag(i) + ".json", hum_json(s, false, d, r));
        write_field_csv(s.controls.h, model.spatial_grid(), run.path("controls_h_" + tag(i) + ".csv"));
        if (!s.converged) run.nonconverged("cg at eps " + fmt_double(s.eps));
        run.metric("J_" + tag(i), s.cost.total());
        run.metric("initial_residual_" + tag(i), s.endpoint_residual);
        trend.push_back({s.eps, s.endpoint_residual, s.cost.total(), double(s.iterations),
                         s.converged ? 1.0 : 0.0, d.defect, r.ratio});
    }
    write_trend(run, trend);
    run.metric("J", trend.back().cost_total);
    run.metric("residual", trend.back().residual);
}

void run_sweep(Run& run, const SpdeModel& model) {
    const auto& c = run.cfg();
    const auto kind = parse_estimate_kind(c.carleman.estimate);
    CarlemanSampler sampler(model, kind, derive_seed(c.seed, "carleman"));
    auto cells = sweep_parameters([&](const WeightParams& p, int rep) { return sampler(p, rep); },
                                  c.weights, c.carleman.lambdas, c.carleman.mus,
                                  c.carleman.repetitions);
    write_sweep_csv(run.path("carleman_sweep.csv"), cells);
    json arr = json::array();
    double worst = 0.0;
    int flagged = 0;
    for (const auto& cell : cells) {
        arr.push_back({{"lambda", cell.lambda}, {"mu", cell.mu}, {"m", cell.m},
                       {"n_samples", cell.n_samples}, {"ratio_median", num(cell.ratio_median)},
                       {"ratio_max", num(cell.ratio_max)}, {"flagged", cell.flagged}});
        worst = std::max(worst, cell.ratio_max);
        flagged += cell.flagged ? 1 : 0;
    }
    run.write_json("carleman_sweep.json", {{"estimate", to_string(kind)}, {"cells", arr}});
    run.metric("ratio_max", worst);
    run.metric("flagged_cells", flagged);
}

// Header plus string rows.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ConfigError("column '" + name + "' missing");
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

Table read_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    Table t;
    std::string line;
    if (std::getline(in, line)) t.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    return t;
}

bool listed(const RunManifest& m, const std::string& f) {
    return std::find(m.files.begin(), m.files.end(), f) != m.files.end();
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Run run(cfg);
    try {
        SpdeModel model = make_model(cfg);
        switch (cfg.problem) {
            case ExperimentKind::simulate: run_simulate(run, model); break;
            case ExperimentKind::forward_linear: run_forward(run, model, false); break;
            case ExperimentKind::forward_semilinear: run_forward(run, model, true); break;
            case ExperimentKind::backward_linear: run_backward(run, model, false); break;
            case ExperimentKind::backward_semilinear: run_backward(run, model, true); break;
            case ExperimentKind::carleman_sweep: run_sweep(run, model); break;
        }
    } catch (const std::exception& e) {
        run.fail(e);
    }
    return run.finish();
}

RunManifest load_manifest(const std::string& dir) {
    const fs::path p = fs::path(dir) / "manifest.json";
    std::ifstream in(p);
    if (!in) throw ConfigError("no manifest at '" + p.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("manifest '" + p.string() + "': " + e.what());
    }
    RunManifest m;
    m.out_dir = dir;
    m.problem = parse_experiment_kind(j.at("problem").get<std::string>());
    m.config_json = j.at("config").dump(2);
    m.files = j.at("files").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("summary").items())
        m.summary.emplace_back(k, v.is_number() ? v.get<double>() : std::stod(v.get<std::string>()));
    m.converged = j.at("converged").get<bool>();
    m.error = j.at("error").get<std::string>();
    m.exit_code = j.at("exit_code").get<int>();
    return m;
}

std::vector<std::string> plot_selectors() { return {"eps-trend", "picard", "carleman", "weights"}; }

std::string emit_plot_data(const RunManifest& m, const std::string& selector) {
    const fs::path dir(m.out_dir);
    const auto sel = plot_selectors();
    if (std::find(sel.begin(), sel.end(), selector) == sel.end())
        throw ConfigError("unknown plot selector '" + selector +
                          "' (available: eps-trend, picard, carleman, weights)");
    auto need = [&](const std::string& f) {
        if (!listed(m, f))
            throw ConfigError("selector '" + selector + "' needs " + f + ", which this run did not produce");
        return read_csv(dir / f);
    };
    const std::string out = (dir / ("plot_" + selector + ".csv")).string();

    if (selector == "eps-trend") {
        const Table t = need("eps_trend.csv");
        const int ce = t.col("eps"), cr = t.col("residual"), cc = t.col("cost_total");
        CsvWriter csv(out, {"eps", "residual", "cost_total"});
        for (const auto& r : t.rows) csv.raw_row({r[ce], r[cr], r[cc]});
    } else if (selector == "picard") {
        CsvWriter csv(out, {"eps_index", "iteration", "increment", "factor"});
        bool any = false;
        for (std::size_t i = 0;; ++i) {
            const std::string f = "picard_" + tag(i) + ".csv";
            if (!listed(m, f)) break;
            any = true;
            const Table t = read_csv(dir / f);
            const int ci = t.col("iteration"), cn = t.col("increment"), cf = t.col("factor");
            for (const auto& r : t.rows) csv.raw_row({std::to_string(i), r[ci], r[cn], r[cf]});
        }
        if (!any) throw ConfigError("selector 'picard' needs a semilinear run");
    } else if (selector == "carleman") {
        const Table t = need("carleman_sweep.csv");
        const int cl = t.col("lambda"), cm = t.col("mu"), cd = t.col("ratio_median"),
                  cx = t.col("ratio_max");
        CsvWriter csv(out, {"lambda", "mu", "ratio_median", "ratio_max"});
        for (const auto& r : t.rows) csv.raw_row({r[cl], r[cm], r[cd], r[cx]});
    } else {
        const Table t = need("weights.csv");
        CsvWriter csv(out, t.header);
        for (const auto& r : t.rows) csv.raw_row(r);
    }
    return out;
}

}  // namespace sgl
