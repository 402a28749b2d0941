// Acceptance run: one line per criterion. Exit is nonzero when a clause fails that
// is not on the known list (see README, known limitations).
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sgl/carleman.hpp"
#include "sgl/config.hpp"
#include "sgl/errors.hpp"
#include "sgl/fixed_point.hpp"
#include "sgl/hum.hpp"
#include "sgl/runner.hpp"
#include "sgl/spde_solvers.hpp"
#include "sgl/weights.hpp"

using namespace sgl;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Verdict {
    bool pass = true;
    bool unexpected = false;  // a failed clause that is not a known limitation
    std::string detail;
};

// Appends "name=value" to the detail and folds ok into the verdict.
void note(Verdict& v, bool ok, const std::string& what, bool known = false) {
    v.pass = v.pass && ok;
    v.unexpected = v.unexpected || (!ok && !known);
    if (!v.detail.empty()) v.detail += "; ";
    v.detail += what + (ok ? "" : known ? " [x, known]" : " [x]");
}

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

SpdeModel model(int n, int steps, int n_b, double T = 0.5) {
    GLCoefficients c;
    c.a = 0.9;
    c.b = 0.6;
    c.a11 = [](double t, double x) { return 1.0 + 0.4 * x + 0.2 * t; };
    c.s0 = 1.0;
    return SpdeModel(SpatialGrid(0, 1, n), TimeGrid(T, steps), n_b, c, Geometry{});
}

// Tempered weights: reduced exponent offset so every penalty stays in range.
WeightParams tempered(double offset = -4.0, double lambda = 2.0) {
    WeightParams p;
    p.lambda = lambda;
    p.mu = 1;
    p.m = 1;
    p.T = 0.5;
    p.offset_override = offset;
    p.alpha_gap_override = 1.5;
    p.sigma_override = 2.0;
    return p;
}

PenalizationConfig pen(double eps, double tol = 1e-8) {
    PenalizationConfig c;
    c.eps = eps;
    c.cg_tol = tol;
    c.cg_max_iters = 2000;
    return c;
}

ComplexField sine(const SpatialGrid& grid, int mode = 1) {
    ComplexField y(grid.size());
    for (int i = 0; i < grid.size(); ++i) y[i] = std::sin(mode * pi * grid.x(i));
    return y;
}

ComplexField noise(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    ComplexField y(n);
    for (auto& v : y) v = {nd(rng), nd(rng)};
    return y;
}

AdaptedField noise(std::mt19937_64& rng, const SpdeModel& m) {
    std::normal_distribution<double> nd;
    AdaptedField f = m.field();
    for (auto& v : f.raw()) v = {nd(rng), nd(rng)};
    return f;
}

ControlSet noise_controls(std::mt19937_64& rng, const SpdeModel& m, bool with_H) {
    ControlSet c{noise(rng, m), {}};
    restrict_to_control_region(m, c.h);
    if (with_H) c.H = noise(rng, m);
    return c;
}

ControlSet shifted(const ControlSet& a, double s, const ControlSet& d) {
    ControlSet c = a;
    c.h.axpy(s, d.h);
    if (!c.H.empty()) c.H.axpy(s, d.H);
    return c;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

// 1 ------------------------------------------------------------------------
Verdict adjoint_gradient() {
    Verdict v;
    std::mt19937_64 rng(101);
    auto m = model(7, 8, 2);
    const double delta = 1e-5;
    double worst_f = 0, worst_b = 0;
    {
        ForwardHum hum(m, tempered(), pen(1e-2));
        auto y0 = noise(rng, 7);
        auto F = noise(rng, m);
        auto c = noise_controls(rng, m, true);
        auto grad = hum.grad_J(c, y0, F);
        for (int k = 0; k < 20; ++k) {
            auto d = noise_controls(rng, m, true);
            const double fd = (hum.eval_J(shifted(c, delta, d), y0, F).total() -
                               hum.eval_J(shifted(c, -delta, d), y0, F).total()) /
                              (2 * delta);
            const double an = hum.inner(grad, d);
            worst_f = std::max(worst_f, std::abs(fd - an) / std::abs(an));
        }
    }
    {
        BackwardHum hum(m, tempered(), pen(1e-2));
        std::vector<ComplexField> yT;
        for (int j = 0; j < m.tree().leaf_count(); ++j) yT.push_back(noise(rng, 7));
        BackwardData data{yT, noise(rng, m), {}};
        auto c = noise_controls(rng, m, false);
        auto grad = hum.grad_J(c, data);
        for (int k = 0; k < 20; ++k) {
            auto d = noise_controls(rng, m, false);
            const double fd = (hum.eval_J(shifted(c, delta, d), data).total() -
                               hum.eval_J(shifted(c, -delta, d), data).total()) /
                              (2 * delta);
            const double an = hum.inner(grad, d);
            worst_b = std::max(worst_b, std::abs(fd - an) / std::abs(an));
        }
    }
    note(v, worst_f < 1e-6, "forward max rel err " + g(worst_f));
    note(v, worst_b < 1e-6, "backward max rel err " + g(worst_b));
    return v;
}

// 2 ------------------------------------------------------------------------
Verdict bsde_oracle() {
    Verdict v;
    std::mt19937_64 rng(202);
    struct Case {
        int n, steps, nb;
        bool upsilon;
    };
    double worst = 0;
    int count = 0;
    std::size_t biggest = 0;
    for (auto c : {Case{5, 8, 0, false}, Case{7, 8, 2, false}, Case{9, 16, 4, false},
                   Case{15, 16, 4, true}, Case{7, 24, 3, false}, Case{31, 20, 5, false},
                   Case{15, 32, 4, true}}) {
        auto m = model(c.n, c.steps, c.nb);
        std::vector<ComplexField> yT;
        for (int j = 0; j < m.tree().leaf_count(); ++j) yT.push_back(noise(rng, c.n));
        BackwardData d{yT, noise(rng, m), {}};
        if (c.upsilon) {
            d.nl.kind = NonlinearKind::linear;
            d.nl.kappa2 = 0.7;
        }
        auto h = noise(rng, m);
        restrict_to_control_region(m, h);
        const auto t0 = std::chrono::steady_clock::now();
        auto s = solve_backward_bsde(m, d, &h);
        auto o = bsde_bruteforce_oracle(m, d, &h);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worst = std::max({worst, max_abs_difference(s.y, o.solution.y),
                          max_abs_difference(s.Y, o.solution.Y)});
        biggest = std::max(biggest, o.unknowns);
        if (secs >= 30) note(v, false, "instance over 30 s");
        ++count;
    }
    note(v, worst < 1e-10, std::to_string(count) + " instances, up to " + std::to_string(biggest) +
                               " unknowns, max node err " + g(worst));
    return v;
}

// 3 ------------------------------------------------------------------------
Verdict duality() {
    Verdict v;
    std::mt19937_64 rng(303);
    double worst = 0;
    int unconverged = 0;
    for (int nb : {0, 1, 2, 3, 4, 6}) {
        auto m = model(15, 48, nb);
        ForwardHum fh(m, tempered(), pen(1e-2));
        auto y0 = noise(rng, 15);
        auto F = noise(rng, m);
        auto s = fh.solve(y0, F);
        unconverged += s.converged ? 0 : 1;
        worst = std::max(worst, fh.duality(s, y0, F).defect);

        BackwardHum bh(m, tempered(), pen(1e-2));
        std::vector<ComplexField> yT;
        for (int j = 0; j < m.tree().leaf_count(); ++j) yT.push_back(noise(rng, 15));
        BackwardData d{yT, noise(rng, m), {}};
        auto sb = bh.solve(d);
        unconverged += sb.converged ? 0 : 1;
        worst = std::max(worst, bh.duality(sb, d).defect);
    }
    note(v, unconverged == 0, "unconverged solves " + std::to_string(unconverged));
    note(v, worst < 1e-6, "n_b 0..6, max relative defect " + g(worst));
    return v;
}

// 4 and 5 share one sweep ----------------------------------------------------
struct SweepRun {
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    std::vector<double> res_f, res_b;
    std::map<std::string, std::vector<double>> terms_f, terms_b;
    bool converged = true;
};

const SweepRun& eps_sweep() {
    static SweepRun r = [] {
        SweepRun r;
        auto m = model(15, 32, 2);
        // narrow gap: controls stay active over the whole sweep
        auto p = tempered(-2.95, 2.5);
        p.alpha_gap_override = 1.05;
        const auto y0 = sine(m.spatial_grid());
        for (double e : r.eps) {
            auto cfg = pen(e);
            cfg.cg_max_iters = 3000;
            ForwardHum fh(m, p, cfg);
            auto s = fh.solve(y0, {});
            r.converged = r.converged && s.converged;
            r.res_f.push_back(s.endpoint_residual);
            auto rep = fh.cost_report(s, y0, {});
            for (const auto& [k, x] : rep.lhs) r.terms_f[k].push_back(x / rep.rhs_total);

            BackwardHum bh(m, p, cfg);
            BackwardData d{{y0}, {}, {}};
            auto sb = bh.solve(d);
            r.converged = r.converged && sb.converged;
            r.res_b.push_back(sb.endpoint_residual);
            auto rb = bh.cost_report(sb, d);
            for (const auto& [k, x] : rb.lhs) r.terms_b[k].push_back(x / rb.rhs_total);
        }
        return r;
    }();
    return r;
}

Verdict penalization_scaling() {
    Verdict v;
    const auto& r = eps_sweep();
    note(v, r.converged, "all CG solves converged");
    for (int side = 0; side < 2; ++side) {
        const auto& res = side == 0 ? r.res_f : r.res_b;
        std::vector<double> scaled;
        bool mono = true;
        for (std::size_t i = 0; i < res.size(); ++i) {
            scaled.push_back(res[i] / r.eps[i]);
            if (i > 0) mono = mono && res[i] < res[i - 1];
        }
        const std::string tag = side == 0 ? "E|y(T)|^2" : "E|y(0)|^2";
        note(v, spread(scaled) < 1.5, tag + "/eps spread " + g(spread(scaled)));
        note(v, mono, tag + (mono ? " decreasing" : " not decreasing"));
    }
    return v;
}

Verdict uniform_cost() {
    Verdict v;
    const auto& r = eps_sweep();
    for (int side = 0; side < 2; ++side) {
        const auto& terms = side == 0 ? r.terms_f : r.terms_b;
        double worst = 1;
        std::string which;
        int used = 0;
        for (const auto& [name, ratios] : terms) {
            if (*std::max_element(ratios.begin(), ratios.end()) == 0) continue;  // absent term
            ++used;
            if (spread(ratios) > worst) {
                worst = spread(ratios);
                which = name;
            }
        }
        note(v, worst <= 2.0,
             std::string(side == 0 ? "forward" : "backward") + " " + std::to_string(used) +
                 " terms, widest band " + g(worst) + (which.empty() ? "" : " (" + which + ")"));
    }
    return v;
}

// 6 ------------------------------------------------------------------------
Verdict carleman() {
    Verdict v;
    auto tree_model = model(15, 16, 2);
    auto flat = model(15, 16, 0);
    const auto p = tempered();
    for (auto kind : {EstimateKind::backward_stochastic, EstimateKind::deterministic,
                      EstimateKind::random}) {
        const auto& m = kind == EstimateKind::deterministic ? flat : tree_model;
        CarlemanSampler gen(m, kind, 606);
        auto cells = sweep_parameters(std::cref(gen), p, {8, 16}, {1}, 100);
        const bool ok = std::isfinite(cells[0].ratio_max) && cells[1].ratio_max <= 2 * cells[0].ratio_max;
        note(v, ok, to_string(kind) + " max ratio " + g(cells[0].ratio_max) + " -> " +
                        g(cells[1].ratio_max));
    }

    // zero data and homogeneity, exact
    auto ws_f = build_weight_set(build_beta(tree_model.geometry(), tree_model.spatial_grid()),
                                 tree_model.geometry(), p, tree_model.spatial_grid(),
                                 tree_model.time_grid(), WeightVariant::forward());
    auto ws_b = build_weight_set(build_beta(tree_model.geometry(), tree_model.spatial_grid()),
                                 tree_model.geometry(), p, tree_model.spatial_grid(),
                                 tree_model.time_grid(), WeightVariant::backward());
    const auto& mask = tree_model.control_mask();
    auto zero = tree_model.field();
    auto z0 = evaluate_backward_estimate(zero, zero, zero, ws_f, mask);
    auto r0 = evaluate_random_estimate(zero, zero, ws_b, mask);
    note(v, z0.lhs_total == 0 && z0.rhs_total == 0 && z0.ratio == 0 && r0.lhs_total == 0 &&
                r0.rhs_total == 0,
         "zero data gives zero");

    std::mt19937_64 rng(66);
    auto z = noise(rng, tree_model), Z = noise(rng, tree_model), Xi = noise(rng, tree_model);
    auto a = evaluate_backward_estimate(z, Z, Xi, ws_f, mask);
    z *= 2.0;
    Z *= 2.0;
    Xi *= 2.0;
    auto b = evaluate_backward_estimate(z, Z, Xi, ws_f, mask);
    auto q = noise(rng, tree_model), w = noise(rng, tree_model);
    auto c = evaluate_random_estimate(q, w, ws_b, mask);
    q *= 2.0;
    w *= 2.0;
    auto d = evaluate_random_estimate(q, w, ws_b, mask);
    note(v, b.lhs_total == 4 * a.lhs_total && b.rhs_total == 4 * a.rhs_total &&
                b.ratio == a.ratio && d.lhs_total == 4 * c.lhs_total && d.ratio == c.ratio,
         "scaling by 2 multiplies both sides by 4");
    return v;
}

// 7 ------------------------------------------------------------------------
Verdict contraction() {
    Verdict v;
    auto m = model(15, 16, 2);
    const auto y0 = sine(m.spatial_grid());
    auto p = tempered();
    p.mu = 2;
    const auto cfg = pen(1e-2, 1e-12);
    // largest factor over several random perturbations
    auto probe = [&](ProblemKind kind, const NonlinearitySpec& nl) {
        std::vector<double> worst(2, 0.0);
        for (std::uint64_t seed = 700; seed < 708; ++seed) {
            auto rows = contraction_probe(kind, m, nl, p, {p.lambda, 2 * p.lambda}, cfg, y0, seed);
            for (int i = 0; i < 2; ++i) worst[i] = std::max(worst[i], rows[i].factor);
        }
        return worst;
    };
    for (auto kind : {ProblemKind::forward, ProblemKind::backward}) {
        const bool fwd = kind == ProblemKind::forward;
        NonlinearitySpec nl;
        nl.kind = NonlinearKind::linear;
        (fwd ? nl.kappa : nl.kappa2) = 1.0;
        // the map is linear in kappa: scale to a one-map factor of 0.3
        const double kappa = 0.3 / probe(kind, nl)[0];
        (fwd ? nl.kappa : nl.kappa2) = kappa;
        const auto f2 = probe(kind, nl);

        PicardConfig pc;
        pc.fp_tol = 1e-8;
        pc.max_iters = 100;
        PicardResult res = fwd ? picard_forward(ForwardHum(m, p, cfg), y0, nl, pc)
                               : picard_backward(BackwardHum(m, p, cfg),
                                                 BackwardData{{y0}, {}, {}}, nl, pc);
        const auto& f = res.trace.factors;
        const double med = f.empty() ? 0 : median(f);
        double dev = 0;
        for (double x : f) dev = std::max(dev, std::abs(x / med - 1));
        const std::string tag = fwd ? "forward" : "backward";
        note(v, f2[0] < 0.5, tag + " kappa " + g(kappa) + " factor " + g(f2[0]));
        char buf[96];
        std::snprintf(buf, sizeof buf, " lambda x2 factor %.6g -> %.6g", f2[0], f2[1]);
        note(v, f2[1] < f2[0], tag + buf);
        note(v, res.trace.converged, tag + " converged in " + std::to_string(res.trace.iterations));
        note(v, dev <= 0.25, tag + " ratio deviation from median " + g(dev), true);
    }
    return v;
}

// 8 ------------------------------------------------------------------------
double heat_error(int n, int steps) {
    SpdeModel m(SpatialGrid(0, 1, n), TimeGrid(0.5, steps), 0, GLCoefficients::constant(1.0, 0.5),
                Geometry{});
    ForwardData d{sine(m.spatial_grid()), {}, {}, true};
    auto y = solve_forward(m, d);
    const Complex decay = std::exp(-Complex(1.0, 0.5) * pi * pi * 0.5);
    const auto yT = y.at(0, steps);
    double e = 0;
    for (int i = 0; i < n; ++i) e += std::norm(yT[i] - decay * std::sin(pi * m.spatial_grid().x(i)));
    return std::sqrt(e * m.spatial_grid().spacing());
}

Verdict convergence_orders() {
    Verdict v;
    const double t1 = heat_error(511, 64), t2 = heat_error(511, 128), t3 = heat_error(511, 256);
    const double s1 = heat_error(7, 1 << 18), s2 = heat_error(15, 1 << 18), s3 = heat_error(31, 1 << 18);
    note(v, t1 / t2 >= 1.8 && t2 / t3 >= 1.8, "dt halving " + g(t1 / t2) + ", " + g(t2 / t3));
    note(v, s1 / s2 >= 3.8 && s2 / s3 >= 3.8, "h halving " + g(s1 / s2) + ", " + g(s2 / s3));
    return v;
}

// 9 ------------------------------------------------------------------------
Verdict weight_machinery() {
    Verdict v;
    bool gamma0 = true, mirror = true, regular = true;
    double junction = 0;
    for (int mm : {1, 2, 3}) {
        WeightParams p;
        p.lambda = 1;
        p.mu = 1;
        p.m = mm;
        p.T = 0.5;
        gamma0 = gamma0 && gamma_eval(0.0, p, WeightVariant::forward()) == 2.0 &&
                 gamma_eval(p.T, p, WeightVariant::backward()) == 2.0;
        SpatialGrid sg(0, 1, 15);
        TimeGrid tg(p.T, 32);
        auto beta = build_beta(Geometry{}, sg);
        for (auto var : {WeightVariant::forward(), WeightVariant::backward(),
                         WeightVariant::forward_eps(0.01), WeightVariant::backward_eps(0.01)}) {
            auto ws = build_weight_set(beta, Geometry{}, p, sg, tg, var);
            junction = std::max(junction, verify_weight_set(ws, p, beta).max_junction_residual);
        }
        for (int j = 0; j <= 400; ++j) {
            const double t = p.T * j / 400.0;
            if (j > 0 && j < 400) {
                const double gf = gamma_eval(t, p, WeightVariant::forward());
                mirror = mirror &&
                         std::abs(gamma_eval(p.T - t, p, WeightVariant::backward()) - gf) <= 1e-10 * gf;
            }
            const double e = 0.02;
            const double ge = gamma_eval(t, p, WeightVariant::forward_eps(e));
            mirror = mirror &&
                     std::abs(gamma_eval(p.T - t, p, WeightVariant::backward_eps(e)) - ge) <= 1e-10 * ge;
            if (t <= p.T / 2)
                regular = regular && ge == gamma_eval(t, p, WeightVariant::forward());
        }
    }
    note(v, gamma0, "gamma(0) = 2");
    note(v, junction < 1e-6, "max junction residual " + g(junction));
    note(v, mirror, "mirrored symmetry");
    note(v, regular, "regularized agreement");
    return v;
}

// 10 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    Verdict v;
    const char* base = R"({
      "grid": {"n_interior": 15, "n_steps": 32, "n_b": 2},
      "coefficients": {"a": 0.9, "b": 0.6, "a11": {"c0": 1.0, "cx": 0.4, "ct": 0.2}},
      "weights": {"lambda": 2, "mu": 1, "offset_override": -4.4, "alpha_gap_override": 1.5,
                  "sigma_override": 2.0},
      "penalization": {"eps_list": [0.01, 0.001, 0.0001]},
      "nonlinearity": {"kind": "saturated", "kappa": 2.0, "kappa2": 2.0},
      "carleman": {"lambdas": [8, 16], "repetitions": 20},
      "data": {"kind": "random", "source": "random", "source_amplitude": 0.1}
    })";
    int files = 0, differ = 0;
    for (auto kind : {ExperimentKind::simulate, ExperimentKind::forward_linear,
                      ExperimentKind::backward_linear, ExperimentKind::forward_semilinear,
                      ExperimentKind::backward_semilinear, ExperimentKind::carleman_sweep}) {
        auto cfg = parse_config(base);
        cfg.problem = kind;
        cfg.seed = 2024;
        cfg.output = (fs::temp_directory_path() / ("sgl_accept_" + to_string(kind))).string();
        // same config twice into the same directory; keep the first run's bytes
        std::map<std::string, std::string> first;
        std::vector<std::string> first_files;
        for (int rep = 0; rep < 2; ++rep) {
            fs::remove_all(cfg.output);
            const auto m = run_experiment(cfg);
            if (m.exit_code != 0) note(v, false, to_string(kind) + " exit " + std::to_string(m.exit_code));
            auto names = m.files;
            names.push_back("manifest.json");
            if (rep == 0) {
                first_files = m.files;
                for (const auto& f : names) first[f] = slurp(fs::path(m.out_dir) / f);
                continue;
            }
            if (m.files != first_files) ++differ;
            for (const auto& f : names) {
                ++files;
                if (slurp(fs::path(m.out_dir) / f) != first[f]) ++differ;
            }
        }
    }
    note(v, differ == 0, std::to_string(files) + " files compared, " + std::to_string(differ) + " differ");
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> all{
        {1, "adjoint gradient vs finite differences", 10, adjoint_gradient},
        {2, "backward solver vs brute-force oracle", 30 * 7, bsde_oracle},
        {3, "duality identity at CG convergence", 120, duality},
        {4, "penalization scaling of the endpoint residual", 300, penalization_scaling},
        {5, "uniform cost bound across eps", 300, uniform_cost},
        {6, "Carleman ratios bounded as lambda doubles", 600, carleman},
        {7, "fixed-point contraction", 600, contraction},
        {8, "solver convergence orders", 600, convergence_orders},
        {9, "weight machinery", 60, weight_machinery},
        {10, "determinism of run outputs", 600, determinism},
    };
    int failed = 0, unexpected = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.unexpected = true;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) note(v, false, "over time limit");
        failed += v.pass ? 0 : 1;
        unexpected += v.unexpected ? 1 : 0;
        std::printf("criterion %2d %s  %s  (%s; %.2f s)\n", c.id, v.pass ? "PASS" : "FAIL", c.name,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed, %d with unexpected failures\n",
                static_cast<int>(all.size()) - failed, all.size(), unexpected);
    return unexpected == 0 ? 0 : 1;
}
