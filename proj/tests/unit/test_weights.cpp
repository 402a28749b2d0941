#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sgl/errors.hpp"
#include "sgl/weights.hpp"

using namespace sgl;

namespace {

WeightParams tempered() {
    WeightParams p;
    p.lambda = 2;
    p.mu = 1;
    p.m = 1;
    p.T = 0.5;
    p.offset_override = 1.0;
    p.alpha_gap_override = 1.5;
    p.sigma_override = 2.0;
    return p;
}

}  // namespace

TEST_CASE("beta on the centered geometry is 4x(1-x)") {
    Geometry g;
    SpatialGrid sg(0, 1, 19);
    auto beta = build_beta(g, sg);
    for (int i = 0; i < sg.size(); ++i) {
        const double x = sg.x(i);
        CHECK(beta.values[i] == doctest::Approx(4 * x * (1 - x)).epsilon(1e-13));
        CHECK(beta.gradient[i] == doctest::Approx(4 - 8 * x).epsilon(1e-12));
        CHECK(beta.values[i] > 0);
        CHECK(beta.values[i] <= 1);
    }
    CHECK(beta.alpha0 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(beta.eval(0.0, g) == 0.0);
    CHECK(beta.eval(1.0, g) == 0.0);
}

TEST_CASE("beta on an off-center geometry keeps its peak inside G'") {
    Geometry g{0, 1, 0.1, 0.5, 0.2, 0.3};
    SpatialGrid sg(0, 1, 41);
    auto beta = build_beta(g, sg);
    CHECK(beta.peak > g.gp_left);
    CHECK(beta.peak < g.gp_right);
    CHECK(beta.eval(beta.peak, g) == doctest::Approx(1.0));
    CHECK(beta.alpha0 > 0);
    for (int i = 0; i < sg.size(); ++i) {
        CHECK(beta.values[i] > 0);
        CHECK(beta.values[i] <= 1 + 1e-15);
        const double x = sg.x(i);
        if (x < g.gp_left || x > g.gp_right) CHECK(std::abs(beta.gradient[i]) >= beta.alpha0);
    }
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS((Geometry{0, 1, 0.4, 0.7, 0.4, 0.6}.validate()), ConfigError);
    CHECK_THROWS_AS((Geometry{0, 1, 0.3, 0.7, 0.5, 0.4}.validate()), ConfigError);
    CHECK_THROWS_AS((Geometry{0, 1, -0.1, 0.7, 0.4, 0.6}.validate()), ConfigError);
    CHECK_NOTHROW(Geometry{}.validate());
}

TEST_CASE("sigma") {
    WeightParams p;
    p.lambda = 1;
    p.mu = 1;
    p.m = 1;
    CHECK(sigma_of(p) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
    p.lambda = 2;
    CHECK(sigma_of(p) == doctest::Approx(2 * std::exp(2.0)).epsilon(1e-14));
    p.lambda = 1;
    p.offset_override = 4.0;
    CHECK_THROWS_AS(sigma_of(p), ParameterError);
}

TEST_CASE("parameter ranges") {
    WeightParams p;
    p.T = 1.2;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.T = 0.5;
    p.lambda = 0.5;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("gamma closed-form values") {
    WeightParams p;
    p.lambda = 1;
    p.mu = 1;
    p.m = 2;
    p.T = 0.5;
    CHECK(gamma_eval(0.0, p, WeightVariant::forward()) == 2.0);
    CHECK(gamma_eval(p.T / 3, p, WeightVariant::forward()) == 1.0);
    CHECK(gamma_eval(7 * p.T / 8, p, WeightVariant::forward()) == doctest::Approx(256.0).epsilon(1e-14));
    CHECK_THROWS_AS(gamma_eval(p.T, p, WeightVariant::forward()), DomainError);
    CHECK_THROWS_AS(gamma_eval(-0.1, p, WeightVariant::forward()), DomainError);
    auto left = gamma_jet(p.T / 4 - 1e-12, p, WeightVariant::forward());
    CHECK(std::abs(left.d1) < 1e-6);
    // mirror
    CHECK(gamma_eval(p.T, p, WeightVariant::backward()) == 2.0);
    CHECK_THROWS_AS(gamma_eval(0.0, p, WeightVariant::backward()), DomainError);
}

TEST_CASE("gamma C2 junctions and bridge monotonicity") {
    for (int m : {1, 2, 3}) {
        WeightParams p;
        p.lambda = 1;
        p.mu = 1;
        p.m = m;
        p.T = 0.5;
        SpatialGrid sg(0, 1, 7);
        TimeGrid tg(p.T, 16);
        auto beta = build_beta(Geometry{}, sg);
        for (auto v : {WeightVariant::forward(), WeightVariant::backward(),
                       WeightVariant::forward_eps(0.01), WeightVariant::backward_eps(0.01)}) {
            auto ws = build_weight_set(beta, Geometry{}, p, sg, tg, v);
            auto d = verify_weight_set(ws, p, beta);
            CHECK(d.max_junction_residual < 1e-6);
            CHECK(d.bridge_monotone);
            CHECK(d.max_alpha < 0);
            CHECK(d.max_log_theta < 0);
            CHECK(d.ok());
        }
    }
}

TEST_CASE("mirror symmetry and regularized agreement") {
    auto p = tempered();
    p.m = 2;
    const double T = p.T;
    for (int j = 0; j <= 400; ++j) {
        const double t = T * j / 400.0;
        if (j > 0 && j < 400) {
            CHECK(std::abs(gamma_eval(T - t, p, WeightVariant::backward()) -
                           gamma_eval(t, p, WeightVariant::forward())) <=
                  1e-10 * gamma_eval(t, p, WeightVariant::forward()));
        }
        const double e = 0.02;
        const double gf = gamma_eval(t, p, WeightVariant::forward_eps(e));
        CHECK(std::abs(gamma_eval(T - t, p, WeightVariant::backward_eps(e)) - gf) <= 1e-10 * gf);
        if (t <= T / 2)
            CHECK(gamma_eval(t, p, WeightVariant::forward_eps(e)) ==
                  gamma_eval(t, p, WeightVariant::forward()));
    }
    for (double e : {0.1, 0.01, 1e-3}) {
        CHECK(gamma_eval(T, p, WeightVariant::forward_eps(e)) ==
              doctest::Approx(std::pow(e, -p.m)).epsilon(1e-12));
    }
}

TEST_CASE("weight set values") {
    WeightParams p;
    p.lambda = 1;
    p.mu = 1;
    p.m = 1;
    p.T = 0.5;
    Geometry g;
    SpatialGrid sg(0, 1, 9);
    TimeGrid tg(p.T, 8);
    auto beta = build_beta(g, sg);
    auto ws = build_weight_set(beta, g, p, sg, tg, WeightVariant::forward());
    for (int i = 0; i < sg.size(); ++i) {
        const double b = beta.values[i];
        const double alpha = std::exp(6 + b) - std::exp(12.0);
        CHECK(ws.alpha(i) == doctest::Approx(alpha).epsilon(1e-13));
        CHECK(ws.log_theta(0, i) == doctest::Approx(2 * p.lambda * alpha).epsilon(1e-13));
        CHECK(ws.xi(3, i) == doctest::Approx(ws.gamma(3) * std::exp(6 + b)).epsilon(1e-13));
    }
    CHECK(ws.singular(8));
    CHECK(!ws.singular(7));
    CHECK(ws.log_theta(8, 0) == -INFINITY);
    // theta decreases to -inf as t -> T
    CHECK(ws.log_theta(7, 0) < ws.log_theta(6, 0));
    // infinite weight where the theta power is negative, zero where positive
    CHECK(ws.log_weight(8, 0, WeightPowers{-2, 0, 0, 0}) == INFINITY);
    CHECK(ws.log_weight(8, 0, WeightPowers{2, 0, 0, 3}) == -INFINITY);
}

TEST_CASE("every regularized set is finite") {
    auto p = tempered();
    SpatialGrid sg(0, 1, 7);
    TimeGrid tg(p.T, 16);
    auto beta = build_beta(Geometry{}, sg);
    for (auto v : {WeightVariant::forward_eps(1e-3), WeightVariant::backward_eps(1e-3)}) {
        auto ws = build_weight_set(beta, Geometry{}, p, sg, tg, v);
        for (int k = 0; k <= 16; ++k) {
            CHECK(!ws.singular(k));
            for (int i = 0; i < 7; ++i) CHECK(std::isfinite(ws.log_theta(k, i)));
        }
    }
}

TEST_CASE("refinement does not change piece values") {
    auto p = tempered();
    SpatialGrid sg(0, 1, 7);
    auto beta = build_beta(Geometry{}, sg);
    auto a = build_weight_set(beta, Geometry{}, p, sg, TimeGrid(p.T, 16), WeightVariant::forward());
    auto b = build_weight_set(beta, Geometry{}, p, sg, TimeGrid(p.T, 32), WeightVariant::forward());
    for (int k = 0; k < 16; ++k) CHECK(a.gamma(k) == b.gamma(2 * k));
}

TEST_CASE("untempered xi saturates loudly") {
    WeightParams p;
    p.lambda = 1;
    p.mu = 200;
    p.m = 1;
    SpatialGrid sg(0, 1, 7);
    TimeGrid tg(p.T, 8);
    auto beta = build_beta(Geometry{}, sg);
    auto ws = build_weight_set(beta, Geometry{}, p, sg, tg, WeightVariant::forward());
    CHECK(ws.saturated_xi() > 0);
    CHECK_THROWS_AS(ws.xi(1, 3), SaturationError);
    CHECK(std::isfinite(ws.log_xi(1, 3)));
}
