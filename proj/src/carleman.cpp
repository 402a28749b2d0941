#include "sgl/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "sgl/errors.hpp"
#include "sgl/io.hpp"
#include "sgl/quadrature.hpp"

namespace sgl {

double CarlemanReport::term(const std::string& name) const {
    for (const auto& [k, v] : lhs)
        if (k == name) return v;
    for (const auto& [k, v] : rhs)
        if (k == name) return v;
    throw ConfigError("carleman report has no term '" + name + "'");
}

namespace {

void finish(CarlemanReport& r) {
    for (const auto& t : r.lhs) r.lhs_total += t.second;
    for (const auto& t : r.rhs) r.rhs_total += t.second;
    if (r.lhs_total == 0.0 && r.rhs_total == 0.0)
        r.ratio = 0.0;
    else
        r.ratio = r.lhs_total / r.rhs_total;
}

void check_grid(const AdaptedField& f, const WeightSet& ws, const char* what) {
    if (f.empty()) return;
    if (f.layout().n_space() != ws.spatial_grid().size() ||
        !(f.layout().time_grid() == ws.time_grid()))
        throw DimensionError(std::string("carleman: ") + what + " does not match the weight grid");
}

AdaptedField gradient_of(const AdaptedField& y, const SpatialGrid& grid) {
    AdaptedField g(y.layout_ptr());
    const auto& lay = y.layout();
    for (int node = 0; node < lay.tree().node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k) {
            auto d = discrete_gradient(y.at(node, k), grid);
            std::copy(d.begin(), d.end(), g.at(node, k).begin());
        }
    }
    return g;
}

double quad(const AdaptedField& f, const WeightSet& ws, const WeightPowers& p, TimeRange r,
            std::span<const char> mask = {}) {
    return f.empty() ? 0.0 : weighted_seminorm(f, ws, p, r, mask);
}

// Composite powers (theta, lambda, mu, xi, extra); theta exponents are +2 here.
WeightPowers endpoint_powers(const WeightParams& p) {
    return {2.0, 2.0, 3.0, 0.0, 2.0 * p.mu * (p.offset() + 1.0)};
}
constexpr WeightPowers kGrad{2.0, 1.0, 2.0, 1.0, 0.0};
constexpr WeightPowers kCubic{2.0, 3.0, 4.0, 3.0, 0.0};
constexpr WeightPowers kSource{2.0, 0.0, 0.0, 0.0, 0.0};
constexpr WeightPowers kMart{2.0, 2.0, 2.0, 3.0, 0.0};

std::shared_ptr<const TreeLayout> flat_layout(const WeightSet& ws) {
    return std::make_shared<const TreeLayout>(build_tree(0, ws.time_grid().horizon()),
                                              ws.time_grid(), ws.spatial_grid().size());
}

AdaptedField from_path(std::span<const ComplexField> path,
                       const std::shared_ptr<const TreeLayout>& lay, const char* what) {
    AdaptedField f(lay);
    if (path.empty()) return f;
    if (static_cast<int>(path.size()) != lay->time_grid().steps() + 1)
        throw DimensionError(std::string("carleman: ") + what + " needs N+1 time slices");
    for (int k = 0; k <= lay->time_grid().steps(); ++k) {
        if (static_cast<int>(path[k].size()) != lay->n_space())
            throw DimensionError(std::string("carleman: ") + what + " has the wrong size");
        std::copy(path[k].begin(), path[k].end(), f.at(0, k).begin());
    }
    return f;
}

}  // namespace

CarlemanReport evaluate_backward_estimate(const AdaptedField& z, const AdaptedField& Z,
                                          const AdaptedField& Xi, const WeightSet& ws,
                                          std::span<const char> g0_mask) {
    if (ws.variant().kind != VariantKind::forward)
        throw ConfigError("carleman: the backward estimate uses forward weights");
    check_grid(z, ws, "z");
    check_grid(Z, ws, "Z");
    check_grid(Xi, ws, "Xi");
    const int N = ws.time_grid().steps();
    CarlemanReport r;
    r.params = ws.params();
    r.lhs.emplace_back("initial", quad(z, ws, endpoint_powers(ws.params()), {0, 0, false}));
    r.lhs.emplace_back("gradient",
                       z.empty() ? 0.0 : quad(gradient_of(z, ws.spatial_grid()), ws, kGrad, {0, N - 1}));
    r.lhs.emplace_back("state", quad(z, ws, kCubic, {0, N - 1}));
    r.rhs.emplace_back("local_state", quad(z, ws, kCubic, {0, N - 1}, g0_mask));
    r.rhs.emplace_back("source", quad(Xi, ws, kSource, {0, N - 1}));
    r.rhs.emplace_back("martingale", quad(Z, ws, kMart, {0, N - 1}));
    finish(r);
    return r;
}

CarlemanReport evaluate_random_estimate(const AdaptedField& q, const AdaptedField& varpi,
                                        const WeightSet& ws, std::span<const char> g0_mask) {
    if (!ws.variant().mirrored() || ws.variant().regularized())
        throw ConfigError("carleman: forward-equation estimates use backward weights");
    check_grid(q, ws, "q");
    check_grid(varpi, ws, "varpi");
    const int N = ws.time_grid().steps();
    CarlemanReport r;
    r.params = ws.params();
    r.lhs.emplace_back("terminal", quad(q, ws, endpoint_powers(ws.params()), {N, N, false}));
    r.lhs.emplace_back("gradient",
                       q.empty() ? 0.0 : quad(gradient_of(q, ws.spatial_grid()), ws, kGrad, {1, N}));
    r.lhs.emplace_back("state", quad(q, ws, kCubic, {1, N}));
    r.rhs.emplace_back("local_state", quad(q, ws, kCubic, {1, N}, g0_mask));
    r.rhs.emplace_back("source", quad(varpi, ws, kSource, {1, N}));
    finish(r);
    return r;
}

CarlemanReport evaluate_deterministic_estimate(std::span<const ComplexField> q,
                                               std::span<const ComplexField> varpi,
                                               const WeightSet& ws,
                                               std::span<const char> g0_mask) {
    auto lay = flat_layout(ws);
    return evaluate_random_estimate(from_path(q, lay, "q"), from_path(varpi, lay, "varpi"), ws,
                                    g0_mask);
}

EstimateKind parse_estimate_kind(const std::string& name) {
    if (name == "backward-stochastic") return EstimateKind::backward_stochastic;
    if (name == "deterministic") return EstimateKind::deterministic;
    if (name == "random") return EstimateKind::random;
    throw ConfigError("unknown estimate '" + name +
                      "' (expected backward-stochastic, deterministic or random)");
}

std::string to_string(EstimateKind kind) {
    switch (kind) {
        case EstimateKind::backward_stochastic: return "backward-stochastic";
        case EstimateKind::deterministic: return "deterministic";
        case EstimateKind::random: return "random";
    }
    return "?";
}

// ---------------------------------------------------------------- sampling

CarlemanSampler::CarlemanSampler(const SpdeModel& model, EstimateKind kind, std::uint64_t seed)
    : model_(model), kind_(kind), seed_(seed) {
    if (kind == EstimateKind::deterministic && model.tree().depth() != 0)
        throw ConfigError("carleman: the deterministic estimate needs n_b = 0");
}

namespace {

void unit_normalize(std::vector<ComplexField>& fields, const std::vector<double>& probs,
                    const SpatialGrid& g) {
    double s = 0.0;
    for (std::size_t j = 0; j < fields.size(); ++j) s += probs[j] * l2_norm_sq(fields[j], g);
    if (s == 0.0) return;
    const double c = 1.0 / std::sqrt(s);
    for (auto& f : fields)
        for (auto& v : f) v *= c;
}

void sparse_fill(AdaptedField& f, std::mt19937_64& rng, double density) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    for (auto& v : f.raw())
        if (ud(rng) < density) v = {nd(rng), nd(rng)};
}

}  // namespace

CarlemanReport CarlemanSampler::operator()(const WeightParams& params, int rep) const {
    const auto& sg = model_.spatial_grid();
    const auto& tree = model_.tree();
    const int n = model_.n();
    std::seed_seq sseq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                       static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(kind_)};
    std::mt19937_64 rng(sseq);
    std::normal_distribution<double> nd;
    // every fourth sample is a single heat mode without source
    const bool heat = rep % 4 == 0;
    const int mode = 1 + (rep / 4) % 4;
    auto data = [&](int count) {
        std::vector<ComplexField> out(count, ComplexField(n));
        std::vector<double> probs(count);
        const int first = tree.first_at_level(tree.depth());
        for (int j = 0; j < count; ++j) {
            probs[j] = count == 1 ? 1.0 : tree.probability(first + j);
            for (int i = 0; i < n; ++i)
                out[j][i] = heat ? Complex(std::sin(mode * std::numbers::pi * sg.x(i)), 0.0)
                                 : Complex(nd(rng), nd(rng));
        }
        unit_normalize(out, probs, sg);
        return out;
    };
    AdaptedField src = model_.field();
    if (!heat) sparse_fill(src, rng, 0.1);

    auto beta = build_beta(model_.geometry(), sg);
    std::span<const char> mask(model_.control_mask());
    CarlemanReport r;
    if (kind_ == EstimateKind::backward_stochastic) {
        WeightSet ws = build_weight_set(beta, model_.geometry(), params, sg, model_.time_grid(),
                                        WeightVariant::forward());
        BackwardData d{data(tree.leaf_count()), src, {}};
        auto sol = solve_backward_bsde(model_, d);
        r = evaluate_backward_estimate(sol.y, sol.Y, src, ws, mask);
    } else {
        WeightSet ws = build_weight_set(beta, model_.geometry(), params, sg, model_.time_grid(),
                                        WeightVariant::backward());
        auto q0 = data(1).front();
        auto q = solve_forward_random(model_, q0, &src);
        if (kind_ == EstimateKind::deterministic) {
            std::vector<ComplexField> qp, wp;
            for (int k = 0; k <= model_.steps(); ++k) {
                qp.emplace_back(q.at(0, k).begin(), q.at(0, k).end());
                wp.emplace_back(src.at(0, k).begin(), src.at(0, k).end());
            }
            r = evaluate_deterministic_estimate(qp, wp, ws, mask);
        } else {
            r = evaluate_random_estimate(q, src, ws, mask);
        }
    }
    r.sample = (heat ? "heat-mode-" + std::to_string(mode) : std::string("random")) + "#" +
               std::to_string(rep);
    return r;
}

// ---------------------------------------------------------------- sweep

std::vector<SweepCell> sweep_parameters(const SampleGenerator& gen, const WeightParams& base,
                                        const std::vector<double>& lambdas,
                                        const std::vector<double>& mus, int repetitions) {
    if (lambdas.empty() || mus.empty()) throw ConfigError("carleman sweep: empty parameter list");
    if (repetitions < 1) throw ConfigError("carleman sweep: repetitions must be >= 1");
    std::vector<SweepCell> cells;
    for (double mu : mus) {
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            WeightParams p = base;
            p.lambda = lambdas[li];
            p.mu = mu;
            std::vector<double> ratios;
            for (int rep = 0; rep < repetitions; ++rep) ratios.push_back(gen(p, rep).ratio);
            SweepCell c;
            c.lambda = p.lambda;
            c.mu = mu;
            c.m = p.m;
            c.n_samples = repetitions;
            c.ratio_max = *std::max_element(ratios.begin(), ratios.end());
            auto mid = ratios.begin() + ratios.size() / 2;
            std::nth_element(ratios.begin(), mid, ratios.end());
            c.ratio_median = *mid;
            if (ratios.size() % 2 == 0) {
                const double lo = *std::max_element(ratios.begin(), mid);
                c.ratio_median = 0.5 * (lo + *mid);
            }
            if (li > 0) {
                const auto& prev = cells.back();
                c.flagged = lambdas[li] >= 2.0 * lambdas[li - 1] * (1 - 1e-12) &&
                            c.ratio_max > 2.0 * prev.ratio_max;
            }
            cells.push_back(c);
        }
    }
    return cells;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells) {
    CsvWriter csv(path.string(),
                  {"lambda", "mu", "m", "n_samples", "ratio_median", "ratio_max", "flagged"});
    for (const auto& c : cells)
        csv.row({c.lambda, c.mu, static_cast<double>(c.m), static_cast<double>(c.n_samples),
                 c.ratio_median, c.ratio_max, c.flagged ? 1.0 : 0.0});
}

}  // namespace sgl
