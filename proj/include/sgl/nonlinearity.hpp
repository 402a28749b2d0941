#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sgl/discretization.hpp"

namespace sgl {

enum class NonlinearKind { zero, linear, saturated, sinusoidal, custom_table };

NonlinearKind parse_nonlinear_kind(const std::string& name);  // throws ConfigError
std::string to_string(NonlinearKind kind);

// Shared shape phi for f (scaled by kappa), g (kappa1) and Upsilon (kappa2).
// Every shape vanishes at 0 and is 1-Lipschitz on C, so the scaled maps have
// the declared constants:
//   linear      y
//   saturated   y / (1 + |y|)          radial, rho(r) = r/(1+r), rho' <= 1
//   sinusoidal  sin(Re y) + i sin(Im y) componentwise 1-Lipschitz
//   custom      rho(|y|) y/|y|         rho piecewise linear through the table,
//                                      rho(0) = 0, |slopes| <= 1, flat after the last knot
struct NonlinearitySpec {
    NonlinearKind kind = NonlinearKind::zero;
    double kappa = 0.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    // (r, rho(r)) knots for custom_table, r strictly increasing and > 0.
    std::vector<std::pair<double, double>> table;

    void validate() const;  // throws ConfigError

    Complex shape(Complex y) const;
    Complex f(Complex y) const { return kappa * shape(y); }
    Complex g(Complex y) const { return kappa1 * shape(y); }
    Complex upsilon(Complex y, Complex Y) const { return 0.5 * kappa2 * (shape(y) + shape(Y)); }

    bool drift_active() const noexcept { return kind != NonlinearKind::zero && kappa != 0.0; }
    bool diffusion_active() const noexcept { return kind != NonlinearKind::zero && kappa1 != 0.0; }
    bool backward_active() const noexcept { return kind != NonlinearKind::zero && kappa2 != 0.0; }
};

void apply_f(const NonlinearitySpec& nl, FieldView y, MutableFieldView out);
void apply_g(const NonlinearitySpec& nl, FieldView y, MutableFieldView out);
void apply_upsilon(const NonlinearitySpec& nl, FieldView y, FieldView Y, MutableFieldView out);

}  // namespace sgl
