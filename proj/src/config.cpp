#include "sgl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sgl/errors.hpp"

namespace sgl {

using json = nlohmann::ordered_json;

ExperimentKind parse_experiment_kind(const std::string& name) {
    if (name == "simulate") return ExperimentKind::simulate;
    if (name == "forward-linear") return ExperimentKind::forward_linear;
    if (name == "backward-linear") return ExperimentKind::backward_linear;
    if (name == "forward-semilinear") return ExperimentKind::forward_semilinear;
    if (name == "backward-semilinear") return ExperimentKind::backward_semilinear;
    if (name == "carleman-sweep") return ExperimentKind::carleman_sweep;
    throw ConfigError("unknown problem '" + name +
                      "' (expected simulate, forward-linear, backward-linear, forward-semilinear, "
                      "backward-semilinear or carleman-sweep)");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::forward_linear: return "forward-linear";
        case ExperimentKind::backward_linear: return "backward-linear";
        case ExperimentKind::forward_semilinear: return "forward-semilinear";
        case ExperimentKind::backward_semilinear: return "backward-semilinear";
        case ExperimentKind::carleman_sweep: return "carleman-sweep";
    }
    return "?";
}

namespace {

// Object reader that remembers its key path and rejects unknown keys.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "must be an object");
    }

    void allow(std::initializer_list<const char*> keys) {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) throw ConfigError("unknown key '" + key(k) + "'");
    }

    bool has(const char* k) const { return j_.contains(k); }

    template <class T>
    void get(const char* k, T& out) const {
        if (!j_.contains(k)) return;
        try {
            out = j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("key '" + key(k) + "' has the wrong type");
        }
    }

    void get_int(const char* k, int& out) const {
        if (!j_.contains(k)) return;
        const auto& v = j_.at(k);
        if (!v.is_number_integer()) throw ConfigError("key '" + key(k) + "' must be an integer");
        out = v.get<int>();
    }

    Section sub(const char* k) const { return Section(j_.at(k), key(k)); }
    const json& raw(const char* k) const { return j_.at(k); }
    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

private:
    std::string where() const { return path_.empty() ? "config: " : "'" + path_ + "' "; }
    const json& j_;
    std::string path_;
};

void read_interval(const Section& s, const char* k, double& lo, double& hi) {
    std::vector<double> v;
    if (!s.has(k)) return;
    s.get(k, v);
    if (v.size() != 2) throw ConfigError("key '" + s.key(k) + "' must be [left, right]");
    lo = v[0];
    hi = v[1];
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": parse error: " + (pos == std::string::npos ? msg : msg.substr(pos)));
    }
    ExperimentConfig c;
    Section top(root, "");
    top.allow({"geometry", "grid", "coefficients", "weights", "penalization", "nonlinearity",
               "fixed_point", "carleman", "data", "problem", "seed", "output",
               "allow_nonconvergence"});

    if (top.has("geometry")) {
        auto s = top.sub("geometry");
        s.allow({"domain", "g0", "gprime"});
        auto& g = c.geometry;
        read_interval(s, "domain", g.domain_left, g.domain_right);
        read_interval(s, "g0", g.g0_left, g.g0_right);
        read_interval(s, "gprime", g.gp_left, g.gp_right);
    }
    if (top.has("grid")) {
        auto s = top.sub("grid");
        s.allow({"n_interior", "n_steps", "n_b"});
        s.get_int("n_interior", c.n_interior);
        s.get_int("n_steps", c.n_steps);
        s.get_int("n_b", c.n_b);
    }
    if (top.has("coefficients")) {
        auto s = top.sub("coefficients");
        s.allow({"a", "b", "a11", "s0"});
        s.get("a", c.a);
        s.get("b", c.b);
        s.get("s0", c.s0);
        if (s.has("a11")) {
            if (s.raw("a11").is_number()) {
                s.get("a11", c.a11.c0);
            } else {
                auto d = s.sub("a11");
                d.allow({"c0", "cx", "ct"});
                d.get("c0", c.a11.c0);
                d.get("cx", c.a11.cx);
                d.get("ct", c.a11.ct);
            }
        }
    }
    if (top.has("weights")) {
        auto s = top.sub("weights");
        s.allow({"lambda", "mu", "m", "T", "offset_override", "alpha_gap_override",
                 "sigma_override"});
        auto& w = c.weights;
        s.get("lambda", w.lambda);
        s.get("mu", w.mu);
        s.get_int("m", w.m);
        s.get("T", w.T);
        for (auto [k, dst] : {std::pair{"offset_override", &w.offset_override},
                              std::pair{"alpha_gap_override", &w.alpha_gap_override},
                              std::pair{"sigma_override", &w.sigma_override}}) {
            if (s.has(k) && !s.raw(k).is_null()) {
                double v = 0;
                s.get(k, v);
                *dst = v;
            }
        }
    }
    if (top.has("penalization")) {
        auto s = top.sub("penalization");
        s.allow({"eps", "eps_list", "cg_tol", "cg_max_iters"});
        if (s.has("eps") && s.has("eps_list"))
            throw ConfigError("penalization: give either 'eps' or 'eps_list', not both");
        if (s.has("eps")) {
            double e = 0;
            s.get("eps", e);
            c.eps_list = {e};
        }
        s.get("eps_list", c.eps_list);
        s.get("cg_tol", c.cg_tol);
        s.get_int("cg_max_iters", c.cg_max_iters);
    }
    if (top.has("nonlinearity")) {
        auto s = top.sub("nonlinearity");
        s.allow({"kind", "kappa", "kappa1", "kappa2", "table"});
        std::string kind = "zero";
        s.get("kind", kind);
        c.nonlinearity.kind = parse_nonlinear_kind(kind);
        s.get("kappa", c.nonlinearity.kappa);
        s.get("kappa1", c.nonlinearity.kappa1);
        s.get("kappa2", c.nonlinearity.kappa2);
        if (s.has("table")) {
            std::vector<std::vector<double>> t;
            s.get("table", t);
            for (const auto& row : t) {
                if (row.size() != 2)
                    throw ConfigError("key 'nonlinearity.table' rows must be [r, rho]");
                c.nonlinearity.table.emplace_back(row[0], row[1]);
            }
        }
    }
    if (top.has("fixed_point")) {
        auto s = top.sub("fixed_point");
        s.allow({"fp_tol", "max_iters"});
        s.get("fp_tol", c.picard.fp_tol);
        s.get_int("max_iters", c.picard.max_iters);
    }
    if (top.has("carleman")) {
        auto s = top.sub("carleman");
        s.allow({"estimate", "lambdas", "mus", "repetitions"});
        s.get("estimate", c.carleman.estimate);
        s.get("lambdas", c.carleman.lambdas);
        s.get("mus", c.carleman.mus);
        s.get_int("repetitions", c.carleman.repetitions);
    }
    if (top.has("data")) {
        auto s = top.sub("data");
        s.allow({"kind", "mode", "amplitude", "source", "source_amplitude"});
        s.get("kind", c.data.kind);
        s.get_int("mode", c.data.mode);
        s.get("amplitude", c.data.amplitude);
        s.get("source", c.data.source);
        s.get("source_amplitude", c.data.source_amplitude);
    }
    if (top.has("problem")) {
        std::string p;
        top.get("problem", p);
        c.problem = parse_experiment_kind(p);
    }
    if (top.has("seed")) {
        const auto& v = top.raw("seed");
        if (!v.is_number_unsigned()) throw ConfigError("key 'seed' must be an unsigned integer");
        c.seed = v.get<std::uint64_t>();
    }
    top.get("output", c.output);
    top.get("allow_nonconvergence", c.allow_nonconvergence);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void ExperimentConfig::validate() const {
    geometry.validate();
    if (n_interior < 3) throw ConfigError("grid.n_interior must be >= 3");
    if (n_steps < 4 || n_steps % 4 != 0) throw ConfigError("grid.n_steps must be a positive multiple of 4");
    if (n_b < 0 || n_b > 24) throw ConfigError("grid.n_b must lie in [0, 24]");
    if (n_b > 0 && n_steps % n_b != 0) throw ConfigError("grid.n_steps must be divisible by grid.n_b");
    if (!(weights.T > 0 && weights.T < 1)) throw ConfigError("T must lie in (0,1)");
    if (!(a > 0)) throw ConfigError("coefficients.a must be positive");
    if (!(s0 > 0)) throw ConfigError("coefficients.s0 must be positive");
    // a11 is affine: its minimum over [domain] x [0, T] sits at a corner
    for (double x : {geometry.domain_left, geometry.domain_right})
        for (double t : {0.0, weights.T})
            if (a11.c0 + a11.cx * x + a11.ct * t < s0)
                throw ConfigError("coefficients.a11 falls below s0 (ellipticity)");
    weights.validate();
    if (eps_list.empty()) throw ConfigError("penalization.eps_list must not be empty");
    for (double e : eps_list) penalization(e).validate();
    nonlinearity.validate();
    picard.validate();
    (void)parse_estimate_kind(carleman.estimate);
    if (carleman.lambdas.empty() || carleman.mus.empty())
        throw ConfigError("carleman.lambdas and carleman.mus must not be empty");
    for (double l : carleman.lambdas)
        if (!(l >= 1)) throw ConfigError("carleman.lambdas entries must be >= 1");
    for (double m : carleman.mus)
        if (!(m >= 1)) throw ConfigError("carleman.mus entries must be >= 1");
    if (carleman.repetitions < 1) throw ConfigError("carleman.repetitions must be >= 1");
    if (data.kind != "sine" && data.kind != "random" && data.kind != "zero")
        throw ConfigError("data.kind must be sine, random or zero");
    if (data.source != "none" && data.source != "random")
        throw ConfigError("data.source must be none or random");
    if (data.mode < 1) throw ConfigError("data.mode must be >= 1");
    if (output.empty()) throw ConfigError("output must not be empty");
}

GLCoefficients ExperimentConfig::coefficients() const {
    GLCoefficients g;
    g.a = a;
    g.b = b;
    g.s0 = s0;
    const DiffusionSpec d = a11;
    g.a11 = [d](double t, double x) { return d.c0 + d.cx * x + d.ct * t; };
    return g;
}

PenalizationConfig ExperimentConfig::penalization(double eps) const {
    PenalizationConfig p;
    p.eps = eps;
    p.cg_tol = cg_tol;
    p.cg_max_iters = cg_max_iters;
    return p;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    const auto& g = c.geometry;
    j["geometry"] = {{"domain", {g.domain_left, g.domain_right}},
                     {"g0", {g.g0_left, g.g0_right}},
                     {"gprime", {g.gp_left, g.gp_right}}};
    j["grid"] = {{"n_interior", c.n_interior}, {"n_steps", c.n_steps}, {"n_b", c.n_b}};
    j["coefficients"] = {{"a", c.a},
                         {"b", c.b},
                         {"a11", {{"c0", c.a11.c0}, {"cx", c.a11.cx}, {"ct", c.a11.ct}}},
                         {"s0", c.s0}};
    json w = {{"lambda", c.weights.lambda}, {"mu", c.weights.mu}, {"m", c.weights.m},
              {"T", c.weights.T}};
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    w["offset_override"] = opt(c.weights.offset_override);
    w["alpha_gap_override"] = opt(c.weights.alpha_gap_override);
    w["sigma_override"] = opt(c.weights.sigma_override);
    j["weights"] = w;
    j["penalization"] = {{"eps_list", c.eps_list},
                         {"cg_tol", c.cg_tol},
                         {"cg_max_iters", c.cg_max_iters}};
    json table = json::array();
    for (const auto& [r, v] : c.nonlinearity.table) table.push_back({r, v});
    j["nonlinearity"] = {{"kind", to_string(c.nonlinearity.kind)},
                         {"kappa", c.nonlinearity.kappa},
                         {"kappa1", c.nonlinearity.kappa1},
                         {"kappa2", c.nonlinearity.kappa2},
                         {"table", table}};
    j["fixed_point"] = {{"fp_tol", c.picard.fp_tol}, {"max_iters", c.picard.max_iters}};
    j["carleman"] = {{"estimate", c.carleman.estimate},
                     {"lambdas", c.carleman.lambdas},
                     {"mus", c.carleman.mus},
                     {"repetitions", c.carleman.repetitions}};
    j["data"] = {{"kind", c.data.kind},
                 {"mode", c.data.mode},
                 {"amplitude", c.data.amplitude},
                 {"source", c.data.source},
                 {"source_amplitude", c.data.source_amplitude}};
    j["problem"] = to_string(c.problem);
    j["seed"] = c.seed;
    j["output"] = c.output;
    j["allow_nonconvergence"] = c.allow_nonconvergence;
    return j.dump(2);
}

}  // namespace sgl
