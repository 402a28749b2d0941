#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgl/discretization.hpp"

namespace sgl {

// G = (domain_left, domain_right), control region G0, inner region G' with
// G' compactly inside G0 and G0 inside G.
struct Geometry {
    double domain_left = 0.0;
    double domain_right = 1.0;
    double g0_left = 0.3;
    double g0_right = 0.7;
    double gp_left = 0.4;
    double gp_right = 0.6;

    void validate() const;  // throws ConfigError
    bool in_control_region(double x) const noexcept { return x > g0_left && x < g0_right; }
};

// beta sampled at the interior nodes, zero at the boundary, peak 1 at the
// midpoint of G'. alpha0 bounds |beta'| from below on G \ closure(G').
struct BetaProfile {
    std::vector<double> values;
    std::vector<double> gradient;
    double alpha0 = 0.0;
    double peak = 0.0;       // stationary point
    double map_ratio = 1.0;  // c in u(s) = s / (s + c (1 - s))

    double eval(double x, const Geometry& g) const;
    double eval_derivative(double x, const Geometry& g) const;
};

BetaProfile build_beta(const Geometry& geometry, const SpatialGrid& grid);

struct WeightParams {
    double lambda = 4.0;
    double mu = 2.0;
    int m = 1;
    double T = 0.5;
    // Replaces the exponent offset 6m in alpha, xi and sigma.
    std::optional<double> offset_override;
    // Replaces the shift 6 in the negative part of alpha: -mu e^{mu(offset + gap)}.
    std::optional<double> alpha_gap_override;
    // Replaces lambda mu^2 e^{mu(offset-4)}; must still be >= 2.
    std::optional<double> sigma_override;

    double offset() const noexcept { return offset_override.value_or(6.0 * m); }
    double alpha_gap() const noexcept { return alpha_gap_override.value_or(6.0); }
    void validate() const;  // throws ParameterError
};

// lambda mu^2 e^{mu(offset-4)} (or the override); ParameterError when < 2.
double sigma_of(const WeightParams& params);

enum class VariantKind { forward, backward, forward_eps, backward_eps };

struct WeightVariant {
    VariantKind kind = VariantKind::forward;
    double eps = 0.0;

    static WeightVariant forward() { return {VariantKind::forward, 0.0}; }
    static WeightVariant backward() { return {VariantKind::backward, 0.0}; }
    static WeightVariant forward_eps(double e) { return {VariantKind::forward_eps, e}; }
    static WeightVariant backward_eps(double e) { return {VariantKind::backward_eps, e}; }
    bool regularized() const noexcept {
        return kind == VariantKind::forward_eps || kind == VariantKind::backward_eps;
    }
    bool mirrored() const noexcept {
        return kind == VariantKind::backward || kind == VariantKind::backward_eps;
    }
    std::string name() const;
};

// Time profile gamma / gamma-tilde / their eps-regularizations. Throws
// DomainError at or beyond the blow-up endpoint of an unregularized variant.
double gamma_eval(double t, const WeightParams& params, const WeightVariant& variant);

struct GammaJet {
    double value;
    double d1;
    double d2;
};
// Value and first two derivatives from the closed form of the active piece.
GammaJet gamma_jet(double t, const WeightParams& params, const WeightVariant& variant);

// Exponent combination of a weight term: theta^a lambda^b mu^c xi^d e^{extra}.
struct WeightPowers {
    double theta = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double xi = 0.0;
    double extra_log = 0.0;
};

// Weights on the (time node, interior space node) grid, stored as logarithms.
// Singular time nodes (gamma = +inf) have log_theta = -inf and log_xi = +inf.
class WeightSet {
public:
    WeightSet(const BetaProfile& beta, const Geometry& geometry, const WeightParams& params,
              const SpatialGrid& sgrid, const TimeGrid& tgrid, const WeightVariant& variant);

    const WeightVariant& variant() const noexcept { return variant_; }
    const WeightParams& params() const noexcept { return params_; }
    const SpatialGrid& spatial_grid() const noexcept { return sgrid_; }
    const TimeGrid& time_grid() const noexcept { return tgrid_; }

    bool singular(int k) const { return singular_.at(k) != 0; }
    double gamma(int k) const { return gamma_.at(k); }
    double log_alpha_abs(int i) const { return log_abs_alpha_.at(i); }
    double alpha(int i) const;  // < 0
    double log_theta(int k, int i) const { return log_theta_[idx(k, i)]; }
    double log_xi(int k, int i) const { return log_xi_[idx(k, i)]; }
    // Throw SaturationError when the value is not representable.
    double xi(int k, int i) const;
    double phi(int k, int i) const;

    // Combined log weight; +inf/-inf at singular nodes where the sign is determined.
    double log_weight(int k, int i, const WeightPowers& p) const;
    // Number of (k, i) with finite log_xi exceeding the double range of exp.
    int saturated_xi() const noexcept { return saturated_xi_; }

private:
    std::size_t idx(int k, int i) const { return static_cast<std::size_t>(k) * n_ + i; }

    WeightVariant variant_;
    WeightParams params_;
    SpatialGrid sgrid_;
    TimeGrid tgrid_;
    int n_;
    std::vector<char> singular_;
    std::vector<double> gamma_;
    std::vector<double> log_abs_alpha_;
    std::vector<double> log_theta_;
    std::vector<double> log_xi_;
    int saturated_xi_ = 0;
};

WeightSet build_weight_set(const BetaProfile& beta, const Geometry& geometry,
                           const WeightParams& params, const SpatialGrid& sgrid,
                           const TimeGrid& tgrid, const WeightVariant& variant);

struct JunctionResidual {
    double t;
    double value;  // relative jumps across the junction
    double d1;
    double d2;
};

struct WeightDiagnostics {
    std::vector<JunctionResidual> junctions;
    double max_junction_residual = 0.0;
    double min_log_xi = 0.0;  // xi > 0 iff finite
    double max_alpha = 0.0;   // must be < 0
    double max_log_theta = 0.0;
    bool bridge_monotone = true;
    int saturated_xi = 0;
    bool ok() const noexcept {
        return max_alpha < 0 && max_log_theta < 0 && bridge_monotone;
    }
};

// C2 junction residuals from one-sided finite differences, positivity of xi,
// negativity of alpha, monotonicity of the bridge piece.
WeightDiagnostics verify_weight_set(const WeightSet& ws, const WeightParams& params,
                                    const BetaProfile& beta);

// Rows (t, x, gamma, phi, xi, log_theta) over interior nodes.
void write_weights_csv(const WeightSet& ws, const std::string& path);

// Largest argument accepted by exp without overflow.
inline constexpr double kLogOverflow = 709.0;

}  // namespace sgl
