#include "sgl/nonlinearity.hpp"

#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

NonlinearKind parse_nonlinear_kind(const std::string& name) {
    if (name == "zero") return NonlinearKind::zero;
    if (name == "linear") return NonlinearKind::linear;
    if (name == "saturated") return NonlinearKind::saturated;
    if (name == "sinusoidal") return NonlinearKind::sinusoidal;
    if (name == "custom-table" || name == "custom_table") return NonlinearKind::custom_table;
    throw ConfigError("unknown nonlinearity kind '" + name +
                      "' (zero, linear, saturated, sinusoidal, custom-table)");
}

std::string to_string(NonlinearKind kind) {
    switch (kind) {
        case NonlinearKind::zero: return "zero";
        case NonlinearKind::linear: return "linear";
        case NonlinearKind::saturated: return "saturated";
        case NonlinearKind::sinusoidal: return "sinusoidal";
        case NonlinearKind::custom_table: return "custom-table";
    }
    return "zero";
}

void NonlinearitySpec::validate() const {
    for (double k : {kappa, kappa1, kappa2})
        if (!(k >= 0.0) || !std::isfinite(k))
            throw ConfigError("nonlinearity: Lipschitz constants must be finite and >= 0");
    if (kind != NonlinearKind::custom_table) return;
    if (table.empty()) throw ConfigError("nonlinearity: custom-table needs at least one knot");
    double r_prev = 0.0, v_prev = 0.0;
    for (const auto& [r, v] : table) {
        if (!(r > r_prev)) throw ConfigError("nonlinearity: table radii must increase from 0");
        if (!std::isfinite(v)) throw ConfigError("nonlinearity: table values must be finite");
        if (std::abs(v - v_prev) > (r - r_prev) * (1.0 + 1e-12))
            throw ConfigError("nonlinearity: table slope exceeds 1 (Lipschitz bound)");
        r_prev = r;
        v_prev = v;
    }
}

namespace {

double table_rho(const std::vector<std::pair<double, double>>& t, double r) {
    double r0 = 0.0, v0 = 0.0;
    for (const auto& [r1, v1] : t) {
        if (r <= r1) return v0 + (v1 - v0) * (r - r0) / (r1 - r0);
        r0 = r1;
        v0 = v1;
    }
    return v0;
}

}  // namespace

Complex NonlinearitySpec::shape(Complex y) const {
    switch (kind) {
        case NonlinearKind::zero: return {};
        case NonlinearKind::linear: return y;
        case NonlinearKind::saturated: return y / (1.0 + std::abs(y));
        case NonlinearKind::sinusoidal: return {std::sin(y.real()), std::sin(y.imag())};
        case NonlinearKind::custom_table: {
            const double r = std::abs(y);
            if (r == 0.0) return {};
            return y * (table_rho(table, r) / r);
        }
    }
    return {};
}

void apply_f(const NonlinearitySpec& nl, FieldView y, MutableFieldView out) {
    if (y.size() != out.size()) throw DimensionError("apply_f: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = nl.f(y[i]);
}

void apply_g(const NonlinearitySpec& nl, FieldView y, MutableFieldView out) {
    if (y.size() != out.size()) throw DimensionError("apply_g: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = nl.g(y[i]);
}

void apply_upsilon(const NonlinearitySpec& nl, FieldView y, FieldView Y, MutableFieldView out) {
    if (y.size() != out.size() || Y.size() != out.size())
        throw DimensionError("apply_upsilon: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = nl.upsilon(y[i], Y[i]);
}

}  // namespace sgl
