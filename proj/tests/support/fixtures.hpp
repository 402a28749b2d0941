#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "sgl/spde_solvers.hpp"
#include "sgl/weights.hpp"

namespace sgltest {

using namespace sgl;

inline SpdeModel make_model(int n, int steps, int n_b, double T = 0.5, double a = 1.0,
                            double b = 0.0) {
    return SpdeModel(SpatialGrid(0, 1, n), TimeGrid(T, steps), n_b, GLCoefficients::constant(a, b),
                     Geometry{});
}

inline SpdeModel make_varying_model(int n, int steps, int n_b, double T = 0.5) {
    GLCoefficients c;
    c.a = 0.9;
    c.b = 0.6;
    c.a11 = [](double t, double x) { return 1.0 + 0.4 * x + 0.2 * t; };
    c.s0 = 1.0;
    return SpdeModel(SpatialGrid(0, 1, n), TimeGrid(T, steps), n_b, c, Geometry{});
}

// Small-exponent weights that stay finite on coarse grids.
inline WeightParams tempered(double T = 0.5) {
    WeightParams p;
    p.lambda = 2;
    p.mu = 1;
    p.m = 1;
    p.T = T;
    p.offset_override = -4.0;
    p.alpha_gap_override = 1.5;
    p.sigma_override = 2.0;
    return p;
}

inline ComplexField random_field(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    ComplexField y(n);
    for (auto& v : y) v = {nd(rng), nd(rng)};
    return y;
}

inline AdaptedField random_adapted(const SpdeModel& m, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    AdaptedField f = m.field();
    for (auto& v : f.raw()) v = {nd(rng), nd(rng)};
    return f;
}

inline ComplexField sine(const SpatialGrid& g, int k = 1) {
    ComplexField y(g.size());
    for (int i = 0; i < g.size(); ++i) y[i] = std::sin(k * std::numbers::pi * g.x(i));
    return y;
}

inline std::vector<ComplexField> random_leaves(const SpdeModel& m, std::mt19937_64& rng) {
    std::vector<ComplexField> out;
    for (int j = 0; j < m.tree().leaf_count(); ++j) out.push_back(random_field(rng, m.n()));
    return out;
}

inline double max_abs(const ComplexField& a, const ComplexField& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

// Probability-weighted real inner product E sum_k dt h Re<f, g> over [k0, k1].
inline double field_dot(const SpdeModel& m, const AdaptedField& f, const AdaptedField& g, int k0,
                        int k1) {
    const auto& lay = m.layout();
    double s = 0;
    for (int node = 0; node < m.tree().node_count(); ++node)
        for (int k = std::max(k0, lay.first_index(node));
             k < lay.first_index(node) + lay.index_count(node) && k <= k1; ++k)
            s += m.tree().probability(node) * m.time_grid().dt() *
                 l2_inner(f.at(node, k), g.at(node, k), m.spatial_grid()).real();
    return s;
}

}  // namespace sgltest
