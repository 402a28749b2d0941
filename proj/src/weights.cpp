#include "sgl/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/io.hpp"

namespace sgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------- geometry

void Geometry::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("geometry: " + what); };
    if (!(domain_left < domain_right)) fail("domain_left must be < domain_right");
    if (!(domain_left < gp_left && gp_left < gp_right && gp_right < domain_right))
        fail("G' must lie strictly inside G");
    if (!(domain_left <= g0_left && g0_right <= domain_right && g0_left < g0_right))
        fail("G0 must lie inside G");
    if (!(g0_left < gp_left && gp_right < g0_right)) fail("G' must be compactly contained in G0");
}

// beta(x) = 4u(1-u), u = s / (s + c(1-s)), s = (x - L)/(R - L). The rational
// map is smooth and strictly increasing with u(peak) = 1/2, so beta has a
// single stationary point at the midpoint of G' and reduces to 4s(1-s) when
// G' is centred.
double BetaProfile::eval(double x, const Geometry& g) const {
    const double s = (x - g.domain_left) / (g.domain_right - g.domain_left);
    const double u = s / (s + map_ratio * (1.0 - s));
    return 4.0 * u * (1.0 - u);
}

double BetaProfile::eval_derivative(double x, const Geometry& g) const {
    const double len = g.domain_right - g.domain_left;
    const double s = (x - g.domain_left) / len;
    const double den = s + map_ratio * (1.0 - s);
    const double u = s / den;
    const double du_ds = map_ratio / (den * den);
    return 4.0 * (1.0 - 2.0 * u) * du_ds / len;
}

BetaProfile build_beta(const Geometry& geometry, const SpatialGrid& grid) {
    geometry.validate();
    if (grid.left() != geometry.domain_left || grid.right() != geometry.domain_right)
        throw ConfigError("build_beta: grid does not cover G");
    BetaProfile b;
    b.peak = 0.5 * (geometry.gp_left + geometry.gp_right);
    const double s0 =
        (b.peak - geometry.domain_left) / (geometry.domain_right - geometry.domain_left);
    b.map_ratio = s0 / (1.0 - s0);

    const int n = grid.size();
    b.values.resize(n);
    b.gradient.resize(n);
    for (int i = 0; i < n; ++i) {
        b.values[i] = b.eval(grid.x(i), geometry);
        b.gradient[i] = b.eval_derivative(grid.x(i), geometry);
    }

    // Infimum of |beta'| over G \ closure(G'): endpoints of G', the nodes
    // outside it, and a dense sweep of both outer intervals.
    double inf = std::min(std::abs(b.eval_derivative(geometry.gp_left, geometry)),
                          std::abs(b.eval_derivative(geometry.gp_right, geometry)));
    for (int i = 0; i < n; ++i) {
        const double x = grid.x(i);
        if (x < geometry.gp_left || x > geometry.gp_right) inf = std::min(inf, std::abs(b.gradient[i]));
    }
    constexpr int kSweep = 4096;
    for (int j = 0; j <= kSweep; ++j) {
        const double w = static_cast<double>(j) / kSweep;
        const double xl = geometry.domain_left + w * (geometry.gp_left - geometry.domain_left);
        const double xr = geometry.gp_right + w * (geometry.domain_right - geometry.gp_right);
        inf = std::min({inf, std::abs(b.eval_derivative(xl, geometry)),
                        std::abs(b.eval_derivative(xr, geometry))});
    }
    b.alpha0 = inf;
    if (!(b.alpha0 > 0)) throw ConfigError("build_beta: construction produced alpha0 <= 0");
    return b;
}

// ------------------------------------------------------------------ params

void WeightParams::validate() const {
    std::ostringstream msg;
    if (!(lambda >= 1)) msg << "lambda must be >= 1; ";
    if (!(mu >= 1)) msg << "mu must be >= 1; ";
    if (m < 1) msg << "m must be >= 1; ";
    if (!(T > 0 && T < 1)) msg << "T must lie in (0,1); ";
    if (!(alpha_gap() > 1)) msg << "alpha gap must exceed 1 so that alpha < 0; ";
    if (!msg.str().empty()) throw ParameterError("weight parameters: " + msg.str());
    (void)sigma_of(*this);
}

double sigma_of(const WeightParams& p) {
    if (!(p.lambda >= 1 && p.mu >= 1 && p.m >= 1))
        throw ParameterError("sigma: requires lambda >= 1, mu >= 1, m >= 1");
    const double sigma = p.sigma_override
                             ? *p.sigma_override
                             : p.lambda * p.mu * p.mu * std::exp(p.mu * (p.offset() - 4.0));
    if (!(sigma >= 2.0)) {
        std::ostringstream msg;
        msg << "sigma = " << sigma << " < 2";
        throw ParameterError(msg.str());
    }
    return sigma;
}

std::string WeightVariant::name() const {
    switch (kind) {
        case VariantKind::forward: return "forward";
        case VariantKind::backward: return "backward";
        case VariantKind::forward_eps: return "forward_eps";
        case VariantKind::backward_eps: return "backward_eps";
    }
    return "?";
}

// ------------------------------------------------------------------- gamma

namespace {

// Closed-form pieces of the forward profile on [0, T]:
//   0: 1 + (1 - 4t/T)^sigma     on [0, T/4)
//   1: 1                        on [T/4, T/2)
//   2: quintic Hermite bridge   on [T/2, 3T/4)
//   3: (T - t)^{-m}             on [3T/4, T)
template <class R>
struct Jet {
    R v, d1, d2;
};

struct Shape {
    double T;
    double sigma;
    int m;
    std::array<double, 6> bridge;  // coefficients in s = (t - T/2)/(T/4)
};

Shape make_shape(const WeightParams& p) {
    Shape sh{p.T, sigma_of(p), p.m, {}};
    // Hermite data at s = 0: (1, 0, 0); at s = 1: derivatives of (T - t)^{-m}
    // at t = 3T/4, rescaled by the interval length L = T/4.
    const double L = p.T / 4.0;
    const double g = std::pow(L, -p.m);
    const double v1 = p.m * g;                // L * gamma'(3T/4)
    const double a1 = p.m * (p.m + 1.0) * g;  // L^2 * gamma''(3T/4)
    const double p0 = 1.0;
    const double p1 = g;
    // Quintic Hermite basis with zero data at s = 0 except the value.
    // H5 = 10s^3 - 15s^4 + 6s^5, H4 = -4s^3 + 7s^4 - 3s^5, H3 = s^3/2 - s^4 + s^5/2.
    const double d = p1 - p0;
    sh.bridge = {p0,
                 0.0,
                 0.0,
                 10.0 * d - 4.0 * v1 + 0.5 * a1,
                 -15.0 * d + 7.0 * v1 - a1,
                 6.0 * d - 3.0 * v1 + 0.5 * a1};
    return sh;
}

template <class R>
Jet<R> piece(int idx, R t, const Shape& sh) {
    const R T = sh.T;
    switch (idx) {
        case 0: {
            const R u = R(1) - R(4) * t / T;
            const R s = sh.sigma;
            return {R(1) + std::pow(u, s), -(R(4) * s / T) * std::pow(u, s - R(1)),
                    s * (s - R(1)) * (R(16) / (T * T)) * std::pow(u, s - R(2))};
        }
        case 1: return {R(1), R(0), R(0)};
        case 2: {
            const R L = T / R(4);
            const R s = (t - T / R(2)) / L;
            const auto& c = sh.bridge;
            const R v = R(c[0]) + s * (R(c[1]) + s * (R(c[2]) + s * (R(c[3]) + s * (R(c[4]) + s * R(c[5])))));
            const R d1 = R(c[1]) + s * (R(2 * c[2]) + s * (R(3 * c[3]) + s * (R(4 * c[4]) + s * R(5 * c[5]))));
            const R d2 = R(2 * c[2]) + s * (R(6 * c[3]) + s * (R(12 * c[4]) + s * R(20 * c[5])));
            return {v, d1 / L, d2 / (L * L)};
        }
        default: {
            const R r = T - t;
            const R m = sh.m;
            return {std::pow(r, -m), m * std::pow(r, -m - R(1)), m * (m + R(1)) * std::pow(r, -m - R(2))};
        }
    }
}

// Active piece and its argument shift for the forward(_eps) profile at tau.
struct Located {
    int piece;
    double shift;
};

Located locate(double tau, double T, double e) {
    if (tau < T / 4) return {0, 0.0};
    if (tau < T / 2 + e) return {1, 0.0};
    if (tau < 3 * T / 4 + e) return {2, e};
    return {3, e};
}

double variant_eps(const WeightParams& p, const WeightVariant& v) {
    if (!v.regularized()) return 0.0;
    if (!(v.eps > 0 && v.eps <= p.T / 4))
        throw ParameterError("regularization eps must lie in (0, T/4]");
    return v.eps;
}

GammaJet jet_impl(double t, const WeightParams& p, const WeightVariant& v, const Shape& sh) {
    if (!(t >= 0 && t <= p.T)) throw DomainError("gamma: t outside [0, T]");
    const double e = variant_eps(p, v);
    const double tau = v.mirrored() ? p.T - t : t;
    const auto loc = locate(tau, p.T, e);
    const double arg = tau - loc.shift;
    if (loc.piece == 3 && !(arg < p.T))
        throw DomainError("gamma: blow-up endpoint of an unregularized weight");
    const auto j = piece<double>(loc.piece, arg, sh);
    const double sign = v.mirrored() ? -1.0 : 1.0;
    return {j.v, sign * j.d1, j.d2};
}

}  // namespace

double gamma_eval(double t, const WeightParams& params, const WeightVariant& variant) {
    return gamma_jet(t, params, variant).value;
}

GammaJet gamma_jet(double t, const WeightParams& params, const WeightVariant& variant) {
    return jet_impl(t, params, variant, make_shape(params));
}

// --------------------------------------------------------------- weight set

WeightSet::WeightSet(const BetaProfile& beta, const Geometry& geometry, const WeightParams& params,
                     const SpatialGrid& sgrid, const TimeGrid& tgrid, const WeightVariant& variant)
    : variant_(variant), params_(params), sgrid_(sgrid), tgrid_(tgrid), n_(sgrid.size()) {
    params.validate();
    geometry.validate();
    if (static_cast<int>(beta.values.size()) != n_)
        throw DimensionError("weight set: beta sampled on a different grid");
    if (std::abs(tgrid.horizon() - params.T) > 1e-14 * params.T)
        throw DimensionError("weight set: time grid horizon differs from T");

    const Shape sh = make_shape(params);
    const int nt = tgrid.steps() + 1;
    const double mu = params.mu;
    const double off = params.offset();
    const double gap = params.alpha_gap();

    log_abs_alpha_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        // |alpha| = mu e^{mu(off+gap)} (1 - e^{mu(beta-gap)}/mu)
        log_abs_alpha_[i] = std::log(mu) + mu * (off + gap) +
                            std::log1p(-std::exp(mu * (beta.values[i] - gap)) / mu);
    }

    singular_.assign(nt, 0);
    gamma_.resize(nt);
    log_theta_.resize(static_cast<std::size_t>(nt) * n_);
    log_xi_.resize(static_cast<std::size_t>(nt) * n_);
    for (int k = 0; k < nt; ++k) {
        double g;
        try {
            g = jet_impl(tgrid.t(k), params, variant, sh).value;
        } catch (const DomainError&) {
            g = kInf;
            singular_[k] = 1;
        }
        gamma_[k] = g;
        const double log_g = std::log(g);
        for (int i = 0; i < n_; ++i) {
            const double abs_phi_log = log_g + log_abs_alpha_[i];
            log_theta_[idx(k, i)] = singular_[k] ? -kInf : -params.lambda * std::exp(abs_phi_log);
            const double lx = log_g + mu * (off + beta.values[i]);
            log_xi_[idx(k, i)] = lx;
            if (std::isfinite(lx) && lx > kLogOverflow) ++saturated_xi_;
        }
    }
}

double WeightSet::alpha(int i) const { return -std::exp(log_abs_alpha_.at(i)); }

double WeightSet::xi(int k, int i) const {
    const double l = log_xi_.at(idx(k, i));
    if (l > kLogOverflow) throw SaturationError("xi exceeds double range", l);
    return std::exp(l);
}

double WeightSet::phi(int k, int i) const {
    const double l = std::log(gamma_.at(k)) + log_abs_alpha_.at(i);
    if (l > kLogOverflow) throw SaturationError("phi exceeds double range", l);
    return -std::exp(l);
}

double WeightSet::log_weight(int k, int i, const WeightPowers& p) const {
    const bool sing = singular_.at(k) != 0;
    if (sing) {
        if (p.theta != 0) return p.theta > 0 ? -kInf : kInf;
        if (p.xi != 0) return p.xi > 0 ? kInf : -kInf;
    }
    double l = p.extra_log;
    if (p.theta != 0) l += p.theta * log_theta_[idx(k, i)];
    if (p.lambda != 0) l += p.lambda * std::log(params_.lambda);
    if (p.mu != 0) l += p.mu * std::log(params_.mu);
    if (p.xi != 0) l += p.xi * log_xi_[idx(k, i)];
    return l;
}

WeightSet build_weight_set(const BetaProfile& beta, const Geometry& geometry,
                           const WeightParams& params, const SpatialGrid& sgrid,
                           const TimeGrid& tgrid, const WeightVariant& variant) {
    return WeightSet(beta, geometry, params, sgrid, tgrid, variant);
}

// ------------------------------------------------------------- diagnostics

namespace {

// One-sided derivatives from six samples f(t0 + j h), j = 0..5, h signed.
template <class R>
Jet<R> one_sided(const std::array<R, 6>& f, R h) {
    const R d1 = (R(-137) * f[0] + R(300) * f[1] - R(300) * f[2] + R(200) * f[3] - R(75) * f[4] +
                  R(12) * f[5]) /
                 (R(60) * h);
    const R d2 = (R(45) * f[0] - R(154) * f[1] + R(214) * f[2] - R(156) * f[3] + R(61) * f[4] -
                  R(10) * f[5]) /
                 (R(12) * h * h);
    return {f[0], d1, d2};
}

JunctionResidual junction(double t0, int left_piece, int right_piece, double shift,
                          const Shape& sh) {
    using R = long double;
    const R delta = R(sh.T) * R(2.5e-4);
    std::array<R, 6> fl{}, fr{};
    for (int j = 0; j < 6; ++j) {
        // Pieces on either side of a junction share the same shift except the
        // 1 -> bridge junction of the eps profile, handled by the caller.
        const R tl = R(t0) - R(j) * delta;
        const R tr = R(t0) + R(j) * delta;
        fl[j] = piece<R>(left_piece, tl - R(left_piece >= 2 ? shift : 0.0), sh).v;
        fr[j] = piece<R>(right_piece, tr - R(right_piece >= 2 ? shift : 0.0), sh).v;
    }
    const auto l = one_sided<R>(fl, -delta);
    const auto r = one_sided<R>(fr, delta);
    auto rel = [](R a, R b) {
        return static_cast<double>(std::abs(a - b) / std::max(R(1), std::abs(b)));
    };
    return {t0, rel(l.v, r.v), rel(l.d1, r.d1), rel(l.d2, r.d2)};
}

}  // namespace

WeightDiagnostics verify_weight_set(const WeightSet& ws, const WeightParams& params,
                                    const BetaProfile& beta) {
    WeightDiagnostics d;
    const Shape sh = make_shape(params);
    const double T = params.T;
    const double e = ws.variant().regularized() ? ws.variant().eps : 0.0;

    // Junctions of the underlying forward profile; mirrored variants are exact
    // reflections and share them.
    d.junctions.push_back(junction(T / 4, 0, 1, e, sh));
    d.junctions.push_back(junction(T / 2 + e, 1, 2, e, sh));
    d.junctions.push_back(junction(3 * T / 4 + e, 2, 3, e, sh));
    if (ws.variant().mirrored())
        for (auto& j : d.junctions) j.t = T - j.t;
    for (const auto& j : d.junctions)
        d.max_junction_residual = std::max({d.max_junction_residual, j.value, j.d1, j.d2});

    for (int s = 0; s <= 1000; ++s) {
        const double t = T / 2 + (T / 4) * s / 1000.0;
        if (piece<double>(2, t, sh).d1 < -1e-12) {
            d.bridge_monotone = false;
            break;
        }
    }

    const int n = ws.spatial_grid().size();
    const int nt = ws.time_grid().steps() + 1;
    d.min_log_xi = kInf;
    d.max_log_theta = -kInf;
    double min_abs_alpha_log = kInf;
    for (int i = 0; i < n; ++i) min_abs_alpha_log = std::min(min_abs_alpha_log, ws.log_alpha_abs(i));
    d.max_alpha = -std::exp(min_abs_alpha_log);
    for (int k = 0; k < nt; ++k) {
        if (ws.singular(k)) continue;
        for (int i = 0; i < n; ++i) {
            d.min_log_xi = std::min(d.min_log_xi, ws.log_xi(k, i));
            d.max_log_theta = std::max(d.max_log_theta, ws.log_theta(k, i));
        }
    }
    d.saturated_xi = ws.saturated_xi();
    (void)beta;
    return d;
}

void write_weights_csv(const WeightSet& ws, const std::string& path) {
    CsvWriter csv(path, {"t", "x", "gamma", "phi", "xi", "log_theta"});
    const auto& sg = ws.spatial_grid();
    const auto& tg = ws.time_grid();
    for (int k = 0; k <= tg.steps(); ++k) {
        for (int i = 0; i < sg.size(); ++i) {
            const double lphi = std::log(ws.gamma(k)) + ws.log_alpha_abs(i);
            const double phi = -std::exp(lphi);
            const double xi = std::exp(ws.log_xi(k, i));
            csv.row({tg.t(k), sg.x(i), ws.gamma(k), phi, xi, ws.log_theta(k, i)});
        }
    }
}

}  // namespace sgl
