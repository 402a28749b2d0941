#include "sgl/quadrature.hpp"

#include <cmath>
#include <string>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

double term(double log_w, Complex v, int k, int i) {
    const double a2 = std::norm(v);
    if (a2 == 0.0 || log_w == -INFINITY) return 0.0;
    // direct product keeps the sum exactly quadratic in v
    if (std::abs(log_w) < kLogOverflow) {
        const double r = std::exp(log_w) * a2;
        if (std::isfinite(r) && r != 0.0) return r;
    }
    const double e = log_w + std::log(a2);
    if (!(e <= kLogOverflow))
        throw SaturationError("weighted quadrature saturated at (k=" + std::to_string(k) +
                                  ", i=" + std::to_string(i) + ")",
                              e);
    return std::exp(e);
}

void check_range(const WeightSet& ws, TimeRange r) {
    if (r.k_first < 0 || r.k_last > ws.time_grid().steps())
        throw DimensionError("quadrature time range outside the grid");
}

void check_mask(std::span<const char> mask, int n) {
    if (!mask.empty() && static_cast<int>(mask.size()) != n)
        throw DimensionError("quadrature mask size mismatch");
}

}  // namespace

double weighted_seminorm(const AdaptedField& f, const WeightSet& ws, const WeightPowers& p,
                         TimeRange range, std::span<const char> mask) {
    const auto& lay = f.layout();
    const int n = ws.spatial_grid().size();
    if (lay.n_space() != n || !(lay.time_grid() == ws.time_grid()))
        throw DimensionError("field and weight grids differ");
    check_range(ws, range);
    check_mask(mask, n);
    const auto& tree = lay.tree();
    const double h = ws.spatial_grid().spacing();
    const double tw = range.with_dt ? ws.time_grid().dt() : 1.0;
    double total = 0.0;
    for (int k = range.k_first; k <= range.k_last; ++k) {
        double at_k = 0.0;
        for (int node = 0; node < tree.node_count(); ++node) {
            if (!lay.owns(node, k)) continue;
            auto v = f.at(node, k);
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!mask.empty() && !mask[i]) continue;
                s += term(ws.log_weight(k, i, p), v[i], k, i);
            }
            at_k += tree.probability(node) * s;
        }
        total += at_k;
    }
    return tw * h * total;
}

double weighted_seminorm(std::span<const ComplexField> path, const WeightSet& ws,
                         const WeightPowers& p, TimeRange range, std::span<const char> mask) {
    const int n = ws.spatial_grid().size();
    check_range(ws, range);
    check_mask(mask, n);
    if (static_cast<int>(path.size()) <= range.k_last) throw DimensionError("path too short");
    const double h = ws.spatial_grid().spacing();
    const double tw = range.with_dt ? ws.time_grid().dt() : 1.0;
    double total = 0.0;
    for (int k = range.k_first; k <= range.k_last; ++k) {
        if (static_cast<int>(path[k].size()) != n) throw DimensionError("path field size");
        for (int i = 0; i < n; ++i) {
            if (!mask.empty() && !mask[i]) continue;
            total += term(ws.log_weight(k, i, p), path[k][i], k, i);
        }
    }
    return tw * h * total;
}

WeightTable::WeightTable(const WeightSet& ws, const WeightPowers& p, int k_first, int k_last,
                         bool allow_infinite)
    : k0_(k_first), k1_(k_last), n_(ws.spatial_grid().size()) {
    if (k_first < 0 || k_last > ws.time_grid().steps() || k_first > k_last + 1)
        throw DimensionError("weight table range outside the grid");
    w_.resize(static_cast<std::size_t>(k_last - k_first + 1) * n_);
    for (int k = k_first; k <= k_last; ++k)
        for (int i = 0; i < n_; ++i) {
            const double lw = ws.log_weight(k, i, p);
            if (lw == INFINITY && allow_infinite) {
                w_[idx(k, i)] = INFINITY;
                continue;
            }
            if (!(lw <= kLogOverflow))
                throw SaturationError("weight table saturated at (k=" + std::to_string(k) +
                                          ", i=" + std::to_string(i) + ")",
                                      lw);
            w_[idx(k, i)] = std::exp(lw);
        }
}

}  // namespace sgl
