#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "sgl/errors.hpp"
#include "sgl/scenario_tree.hpp"

using namespace sgl;

TEST_CASE("binomial construction") {
    auto t = build_tree(1, 0.25);
    CHECK(t.node_count() == 3);
    CHECK(t.leaf_count() == 2);
    CHECK(t.increment(1) == 0.5);
    CHECK(t.increment(2) == -0.5);
    CHECK(t.probability(1) == 0.5);
    auto d = build_tree(0, 0.5);
    CHECK(d.node_count() == 1);
    CHECK(d.is_leaf(0));
}

TEST_CASE("level probabilities and increment moments are exact") {
    auto t = build_tree(6, 0.5);
    for (int l = 0; l <= 6; ++l) {
        double s = 0;
        for (int n = t.first_at_level(l); n < t.first_at_level(l + 1); ++n) s += t.probability(n);
        CHECK(s == 1.0);
    }
    for (int n = 0; n < t.first_at_level(6); ++n) {
        const double a = t.increment(t.child(n, 0)), b = t.increment(t.child(n, 1));
        CHECK(0.5 * (a + b) == 0.0);
        CHECK(0.5 * (a * a + b * b) == doctest::Approx(t.dtau()).epsilon(1e-15));
    }
}

TEST_CASE("conditional expectation and martingale increment") {
    auto t = build_tree(3, 0.5);
    Complex kids[2] = {{1, 1}, {3, -1}};
    CHECK(conditional_expectation(t, 0, kids) == Complex(2, 0));
    Complex same[2] = {{2, 5}, {2, 5}};
    CHECK(conditional_expectation(t, 1, same) == same[0]);
    CHECK(martingale_increment(t, 1, same) == Complex{});
    const double s = std::sqrt(t.dtau());
    Complex c{0.7, -1.1};
    Complex mk[2] = {c * s, -c * s};
    CHECK(std::abs(martingale_increment(t, 2, mk) - c) < 1e-15);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 50; ++rep) {
        Complex v[2] = {{nd(rng), nd(rng)}, {nd(rng), nd(rng)}};
        const Complex ce = conditional_expectation(t, 0, v), Y = martingale_increment(t, 0, v);
        for (int w = 0; w < 2; ++w)
            CHECK(std::abs(v[w] - ce - Y * t.increment(t.child(0, w))) < 1e-14);
        Complex u[2] = {{nd(rng), nd(rng)}, {nd(rng), nd(rng)}};
        const Complex al{nd(rng), nd(rng)}, be{nd(rng), nd(rng)};
        Complex lin[2] = {al * u[0] + be * v[0], al * u[1] + be * v[1]};
        CHECK(std::abs(conditional_expectation(t, 0, lin) -
                       (al * conditional_expectation(t, 0, u) + be * ce)) < 1e-14);
    }
    const int leaf = t.first_at_level(3);
    CHECK_THROWS_AS(conditional_expectation(t, leaf, kids), DimensionError);
    CHECK_THROWS_AS(martingale_increment(t, leaf, kids), DimensionError);
}

TEST_CASE("expectations over leaves") {
    auto t = build_tree(5, 0.5);
    std::vector<Complex> c(t.leaf_count(), Complex(1.5, -2));
    CHECK(expectation_over_leaves(t, c) == Complex(1.5, -2));
    std::vector<Complex> B(t.leaf_count()), B2(t.leaf_count());
    for (int j = 0; j < t.leaf_count(); ++j) {
        const double b = t.brownian_value(t.first_at_level(5) + j);
        B[j] = b;
        B2[j] = b * b;
    }
    CHECK(std::abs(expectation_over_leaves(t, B)) < 1e-15);
    CHECK(expectation_over_leaves(t, B2).real() == doctest::Approx(0.5).epsilon(1e-14));
    B.pop_back();
    CHECK_THROWS_AS(expectation_over_leaves(t, B), DimensionError);
}

TEST_CASE("tower property and discrete Ito isometry") {
    auto t = build_tree(6, 0.5);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    std::vector<Complex> val(t.node_count());
    const int first_leaf = t.first_at_level(6);
    for (int n = first_leaf; n < t.node_count(); ++n) val[n] = {nd(rng), nd(rng)};
    std::vector<Complex> leaves(val.begin() + first_leaf, val.end());
    for (int n = first_leaf - 1; n >= 0; --n) {
        Complex kids[2] = {val[t.child(n, 0)], val[t.child(n, 1)]};
        val[n] = conditional_expectation(t, n, kids);
    }
    CHECK(std::abs(val[0] - expectation_over_leaves(t, leaves)) < 1e-14);

    // Y adapted real: one value per non-leaf node; stochastic integral per leaf
    std::vector<double> Y(first_leaf);
    for (auto& y : Y) y = nd(rng);
    std::vector<Complex> I2(t.leaf_count());
    double rhs = 0;
    for (int n = 0; n < first_leaf; ++n) rhs += t.probability(n) * Y[n] * Y[n] * t.dtau();
    for (int j = 0; j < t.leaf_count(); ++j) {
        auto p = t.path(first_leaf + j);
        double s = 0;
        for (std::size_t l = 0; l + 1 < p.size(); ++l) s += Y[p[l]] * t.increment(p[l + 1]);
        I2[j] = s * s;
    }
    CHECK(expectation_over_leaves(t, I2).real() == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("layout ownership") {
    auto t = build_tree(2, 0.5);
    TimeGrid tg(0.5, 8);
    TreeLayout lay(t, tg, 3);
    CHECK(lay.steps_per_noise() == 4);
    CHECK(lay.first_index(0) == 0);
    CHECK(lay.index_count(0) == 4);
    CHECK(lay.first_index(1) == 4);
    CHECK(lay.first_index(3) == 8);
    CHECK(lay.index_count(3) == 1);
    CHECK(lay.slot_count() == 4 + 2 * 4 + 4);
    CHECK(lay.is_boundary_step(3));
    CHECK(lay.is_boundary_step(7));
    CHECK(!lay.is_boundary_step(4));
    CHECK(lay.owner_on_path(5, 0) == 0);
    CHECK(lay.owner_on_path(5, 5) == 2);
    CHECK(lay.owner_on_path(5, 8) == 5);
    CHECK_THROWS_AS(lay.slot(1, 2), DimensionError);
    CHECK_THROWS_AS(TreeLayout(build_tree(3, 0.5), tg, 3), ConfigError);

    TreeLayout flat(build_tree(0, 0.5), tg, 3);
    CHECK(flat.slot_count() == 9);
    CHECK(flat.owner_on_path(0, 8) == 0);
    CHECK(!flat.is_boundary_step(7));
}

TEST_CASE("adapted field storage and arithmetic") {
    auto lay = std::make_shared<const TreeLayout>(build_tree(2, 0.5), TimeGrid(0.5, 8), 3);
    AdaptedField a(lay), b(lay);
    a.at(1, 5)[2] = {1, 2};
    b.at(1, 5)[2] = {3, 4};
    a += b;
    CHECK(a.at(1, 5)[2] == Complex(4, 6));
    a.axpy(Complex(0, 1), b);
    CHECK(a.at(1, 5)[2] == Complex(0, 9));
    CHECK(a.on_path(3, 5)[2] == Complex(0, 9));
    CHECK(a.all_finite());
    auto other = std::make_shared<const TreeLayout>(build_tree(1, 0.5), TimeGrid(0.5, 8), 3);
    AdaptedField c(other);
    CHECK_THROWS_AS(a += c, DimensionError);
    SpatialGrid g(0, 1, 3);
    AdaptedField one(lay);
    for (auto& v : one.raw()) v = 1.0;
    CHECK(expected_l2_sq_at(one, 5, g) == doctest::Approx(3 * g.spacing()));
    CHECK(expected_l2_sq_at(one, 8, g) == doctest::Approx(3 * g.spacing()));
}
