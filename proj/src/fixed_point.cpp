#include "sgl/fixed_point.hpp"

#include <cmath>
#include <random>

#include "sgl/errors.hpp"
#include "sgl/quadrature.hpp"

namespace sgl {

double source_norm_S(const AdaptedField& F, const WeightSet& ws) {
    if (ws.variant().kind != VariantKind::forward)
        throw ConfigError("source norm S uses forward weights");
    if (F.empty()) return 0.0;
    return std::sqrt(weighted_seminorm(F, ws, kPowersH, {0, ws.time_grid().steps() - 1}));
}

double source_norm_Q(const AdaptedField& F, const WeightSet& ws) {
    if (ws.variant().kind != VariantKind::backward)
        throw ConfigError("source norm Q uses backward weights");
    if (F.empty()) return 0.0;
    return std::sqrt(weighted_seminorm(F, ws, kPowersH, {1, ws.time_grid().steps()}));
}

void PicardConfig::validate() const {
    if (!(fp_tol > 0)) throw ConfigError("fp_tol must be positive");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
}

namespace {

AdaptedField map_f(const NonlinearitySpec& nl, const AdaptedField& y) {
    AdaptedField out(y.layout_ptr());
    if (nl.drift_active()) apply_f(nl, y.raw(), out.raw());
    return out;
}

AdaptedField map_upsilon(const NonlinearitySpec& nl, const AdaptedField& y, const AdaptedField& Y) {
    AdaptedField out(y.layout_ptr());
    if (nl.backward_active()) apply_upsilon(nl, y.raw(), Y.raw(), out.raw());
    return out;
}

template <class Solve, class Map, class Norm>
PicardResult picard(const SpdeModel& model, Solve solve, Map map, Norm norm,
                    const PicardConfig& cfg) {
    cfg.validate();
    PicardResult res;
    auto& tr = res.trace;
    AdaptedField F = model.field();
    for (int it = 1; it <= cfg.max_iters; ++it) {
        res.solution = solve(F);
        AdaptedField next = map(res.solution);
        AdaptedField diff = next;
        diff -= F;
        const double inc = norm(diff), nn = norm(next);
        if (!std::isfinite(inc) || !std::isfinite(nn))
            throw NumericalError("fixed point: non-finite source at iteration " + std::to_string(it));
        tr.increments.push_back(inc);
        tr.source_norms.push_back(nn);
        if (tr.increments.size() > 1) {
            const double prev = tr.increments[tr.increments.size() - 2];
            tr.factors.push_back(prev > 0 ? inc / prev : 0.0);
        }
        tr.iterations = it;
        tr.final_source = F;
        if (inc < cfg.fp_tol * (1.0 + nn)) {
            tr.converged = true;
            break;
        }
        F = std::move(next);
    }
    return res;
}

}  // namespace

PicardResult picard_forward(const ForwardHum& hum, const ComplexField& y0,
                            const NonlinearitySpec& nl, const PicardConfig& cfg) {
    nl.validate();
    const auto& ws = hum.weights();
    return picard(
        hum.model(), [&](const AdaptedField& F) { return hum.solve(y0, F); },
        [&](const HumSolution& s) { return map_f(nl, s.y); },
        [&](const AdaptedField& F) { return source_norm_S(F, ws); }, cfg);
}

PicardResult picard_backward(const BackwardHum& hum, const BackwardData& data,
                             const NonlinearitySpec& nl, const PicardConfig& cfg) {
    nl.validate();
    const auto& ws = hum.weights();
    return picard(
        hum.model(),
        [&](const AdaptedField& F) {
            BackwardData d{data.yT, F, {}};
            return hum.solve(d);
        },
        [&](const HumSolution& s) { return map_upsilon(nl, s.y, s.Y); },
        [&](const AdaptedField& F) { return source_norm_Q(F, ws); }, cfg);
}

std::vector<ProbeRow> contraction_probe(ProblemKind kind, const SpdeModel& model,
                                        const NonlinearitySpec& nl, const WeightParams& base,
                                        const std::vector<double>& lambdas,
                                        const PenalizationConfig& cfg, const ComplexField& data,
                                        std::uint64_t seed) {
    if (lambdas.empty()) throw ConfigError("contraction probe: empty lambda list");
    nl.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    AdaptedField F1 = model.field(), delta = model.field();
    for (auto& v : F1.raw()) v = {nd(rng), nd(rng)};
    for (auto& v : delta.raw()) v = {nd(rng), nd(rng)};
    AdaptedField F2 = F1;
    F2 += delta;

    std::vector<ProbeRow> rows;
    for (double lam : lambdas) {
        WeightParams p = base;
        p.lambda = lam;
        ProbeRow row;
        row.lambda = lam;
        if (kind == ProblemKind::forward) {
            ForwardHum hum(model, p, cfg);
            auto s1 = hum.solve(data, F1), s2 = hum.solve(data, F2);
            auto e = map_f(nl, s1.y);
            e -= map_f(nl, s2.y);
            auto dy = s1.y;
            dy -= s2.y;
            const double dF = source_norm_S(delta, hum.weights());
            row.factor = source_norm_S(e, hum.weights()) / dF;
            row.bound = nl.drift_active() ? nl.kappa * source_norm_S(dy, hum.weights()) / dF : 0.0;
        } else {
            BackwardHum hum(model, p, cfg);
            auto s1 = hum.solve(BackwardData{{data}, F1, {}});
            auto s2 = hum.solve(BackwardData{{data}, F2, {}});
            auto e = map_upsilon(nl, s1.y, s1.Y);
            e -= map_upsilon(nl, s2.y, s2.Y);
            auto dy = s1.y, dY = s1.Y;
            dy -= s2.y;
            dY -= s2.Y;
            const double dF = source_norm_Q(delta, hum.weights());
            row.factor = source_norm_Q(e, hum.weights()) / dF;
            row.bound = nl.backward_active()
                            ? 0.5 * nl.kappa2 *
                                  (source_norm_Q(dy, hum.weights()) + source_norm_Q(dY, hum.weights())) / dF
                            : 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace sgl
