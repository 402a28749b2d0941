#include "sgl/hum.hpp"

#include <cmath>
#include <functional>

#include "sgl/errors.hpp"

namespace sgl {

void PenalizationConfig::validate() const {
    if (!(eps > 0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
    if (!(cg_tol > 0 && cg_tol < 1)) throw ConfigError("cg_tol must lie in (0,1)");
    if (cg_max_iters < 1) throw ConfigError("cg_max_iters must be >= 1");
    if (!(duality_floor > 0)) throw ConfigError("duality floor must be positive");
}

double CostReport::term(const std::string& name) const {
    for (const auto& [k, v] : lhs)
        if (k == name) return v;
    for (const auto& [k, v] : rhs)
        if (k == name) return v;
    throw ConfigError("cost report has no term '" + name + "'");
}

namespace {

// ---------------------------------------------------------------- control algebra

void axpy(ControlSet& y, double a, const ControlSet& x) {
    y.h.axpy(a, x.h);
    if (!y.H.empty()) y.H.axpy(a, x.H);
}

void scale(ControlSet& y, double a) {
    y.h *= a;
    if (!y.H.empty()) y.H *= a;
}

double raw_dot(const std::vector<Complex>& a, const std::vector<Complex>& b,
               const std::vector<double>& slot_w, const std::vector<double>* diag, int n) {
    double s = 0.0;
    for (std::size_t slot = 0; slot < slot_w.size(); ++slot) {
        if (slot_w[slot] == 0.0) continue;
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t j = slot * n + i;
            const double re = a[j].real() * b[j].real() + a[j].imag() * b[j].imag();
            t += diag ? (*diag)[j] * re : re;
        }
        s += slot_w[slot] * t;
    }
    return s;
}

// z = g / D where D > 0, else 0
void divide_by(std::vector<Complex>& z, const std::vector<Complex>& g,
               const std::vector<double>& D) {
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = D[j] > 0 ? g[j] / D[j] : Complex{};
}

struct PcgOps {
    std::function<ControlSet(const ControlSet&)> grad;
    std::function<ControlSet(const ControlSet&)> apply_A;
    std::function<double(const ControlSet&, const ControlSet&)> inner;
    std::function<double(const ControlSet&, const ControlSet&)> penalty_inner;
    std::function<ControlSet(const ControlSet&)> precond;
    std::function<double(const ControlSet&)> J;
};

struct PcgOutcome {
    ControlSet c;
    int iterations = 0;
    bool converged = false;
    double grad_rel = 0.0;
    std::vector<double> J_history;
};

PcgOutcome pcg(const PcgOps& ops, ControlSet c, const PenalizationConfig& cfg) {
    PcgOutcome out;
    ControlSet g = ops.grad(c);
    ControlSet z = ops.precond(g);
    double rz = ops.inner(g, z);
    const double g0 = std::sqrt(std::max(rz, 0.0));
    double J = ops.J(c);
    out.J_history.push_back(J);
    if (!std::isfinite(rz) || !std::isfinite(J))
        throw NumericalError("HUM: non-finite initial gradient or cost");
    if (g0 == 0.0) {
        out.c = std::move(c);
        out.converged = true;
        return out;
    }
    ControlSet p = z;
    scale(p, -1.0);
    for (int it = 1; it <= cfg.cg_max_iters; ++it) {
        ControlSet Ap = ops.apply_A(p);
        const double pAp = ops.inner(p, Ap);
        if (!(pAp > 0) || !std::isfinite(pAp))
            throw NumericalError("HUM: curvature lost in conjugate gradient");
        const double gp = ops.inner(g, p);
        const double alpha = rz / pAp;
        axpy(c, alpha, p);
        J += alpha * gp + 0.5 * alpha * alpha * pAp;
        out.J_history.push_back(J);
        if (it % 50 == 0) {
            g = ops.grad(c);  // residual replacement
        } else {
            axpy(g, alpha, Ap);
        }
        z = ops.precond(g);
        const double rz_new = ops.inner(g, z);
        out.iterations = it;
        const double gn = std::sqrt(std::max(rz_new, 0.0));
        out.grad_rel = gn / g0;
        const double cn = std::sqrt(std::max(ops.penalty_inner(c, c), 0.0));
        if (gn <= cfg.cg_tol * g0 && gn <= cfg.cg_tol * cn) {
            out.converged = true;
            break;
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        scale(p, beta);
        axpy(p, -1.0, z);
    }
    out.c = std::move(c);
    return out;
}

std::vector<double> probability_dt_h(const SpdeModel& model) {
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    std::vector<double> pw(lay.slot_count(), 0.0);
    const double dh = model.time_grid().dt() * model.spatial_grid().spacing();
    for (int node = 0; node < tree.node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k)
            pw[lay.slot(node, k)] = tree.probability(node) * dh;
    }
    return pw;
}

// Per (slot, i) table of w(k, i) for k in [k0, k1], 0 elsewhere (and off the mask).
std::vector<double> slot_table(const SpdeModel& model, const WeightTable& wt, int k0, int k1,
                               const std::vector<char>* mask) {
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    const int n = model.n();
    std::vector<double> out(lay.slot_count() * n, 0.0);
    for (int node = 0; node < tree.node_count(); ++node) {
        const int first = lay.first_index(node);
        for (int k = first; k < first + lay.index_count(node); ++k) {
            if (k < k0 || k > k1) continue;
            const std::size_t s = lay.slot(node, k);
            for (int i = 0; i < n; ++i)
                if (!mask || (*mask)[i]) out[s * n + i] = wt(k, i);
        }
    }
    return out;
}

std::vector<double> slot_range(const SpdeModel& model, const std::vector<double>& pw, int k0,
                               int k1) {
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    std::vector<double> out(pw.size(), 0.0);
    for (int node = 0; node < tree.node_count(); ++node) {
        const int first = lay.first_index(node);
        for (int k = first; k < first + lay.index_count(node); ++k)
            if (k >= k0 && k <= k1) out[lay.slot(node, k)] = pw[lay.slot(node, k)];
    }
    return out;
}

double weighted_sq(const std::vector<Complex>& v, const std::vector<double>& pw,
                   const std::vector<double>& w, int n) {
    double s = 0.0;
    for (std::size_t slot = 0; slot < pw.size(); ++slot) {
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t j = slot * n + i;
            if (w[j] != 0.0) t += w[j] * std::norm(v[j]);
        }
        s += pw[slot] * t;
    }
    return s;
}

// Re sum pw <a, b> over slots with pw != 0
double weighted_re_dot(const std::vector<Complex>& a, const std::vector<Complex>& b,
                       const std::vector<double>& pw, int n) {
    return raw_dot(a, b, pw, nullptr, n);
}

void zero_off_slots(std::vector<Complex>& v, const std::vector<double>& slot_w, int n) {
    for (std::size_t slot = 0; slot < slot_w.size(); ++slot)
        if (slot_w[slot] == 0.0)
            for (int i = 0; i < n; ++i) v[slot * n + i] = Complex{};
}

double expected_sq_at(const AdaptedField& f, int k, const SpatialGrid& g) {
    return expected_l2_sq_at(f, k, g);
}

AdaptedField gradient_field(const AdaptedField& y, const SpatialGrid& grid) {
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

void finish_report(CostReport& r) {
    r.lhs_total = 0.0;
    r.rhs_total = 0.0;
    for (const auto& t : r.lhs) r.lhs_total += t.second;
    for (const auto& t : r.rhs) r.rhs_total += t.second;
    if (r.lhs_total == 0.0 && r.rhs_total == 0.0)
        r.ratio = 0.0;
    else
        r.ratio = r.lhs_total / r.rhs_total;
}

void check_weights_fit(const SpdeModel& model, const WeightParams& params) {
    params.validate();
    if (std::abs(params.T - model.time_grid().horizon()) > 1e-14)
        throw ConfigError("weight horizon T differs from the time grid horizon");
}

}  // namespace

// ====================================================================== forward

ForwardHum::ForwardHum(const SpdeModel& model, const WeightParams& params, PenalizationConfig cfg)
    : model_(model),
      cfg_(cfg),
      beta_((check_weights_fit(model, params), cfg.validate(),
             build_beta(model.geometry(), model.spatial_grid()))),
      ws_(build_weight_set(beta_, model.geometry(), params, model.spatial_grid(),
                           model.time_grid(), WeightVariant::forward())),
      ws_eps_(build_weight_set(beta_, model.geometry(), params, model.spatial_grid(),
                               model.time_grid(), WeightVariant::forward_eps(cfg.eps))),
      has_H_(model.tree().depth() > 0) {
    const int N = model.steps();
    auto pw = probability_dt_h(model);
    slot_w_ = slot_range(model, pw, 0, N - 1);
    Dh_ = slot_table(model, WeightTable(ws_, kPowersH, 0, N - 1), 0, N - 1,
                     &model.control_mask());
    if (has_H_) DH_ = slot_table(model, WeightTable(ws_, kPowersBigH, 0, N - 1), 0, N - 1, nullptr);
    W_ = N >= 2 ? slot_table(model, WeightTable(ws_eps_, kPowersState, 1, N - 1), 1, N - 1, nullptr)
                : std::vector<double>(pw.size() * model.n(), 0.0);
}

ControlSet ForwardHum::zero_controls() const {
    ControlSet c{model_.field(), {}};
    if (has_H_) c.H = model_.field();
    return c;
}

double ForwardHum::inner(const ControlSet& a, const ControlSet& b) const {
    const int n = model_.n();
    double s = raw_dot(a.h.raw(), b.h.raw(), slot_w_, nullptr, n);
    if (has_H_) s += raw_dot(a.H.raw(), b.H.raw(), slot_w_, nullptr, n);
    return s;
}

double ForwardHum::penalty_inner(const ControlSet& a, const ControlSet& b) const {
    const int n = model_.n();
    double s = raw_dot(a.h.raw(), b.h.raw(), slot_w_, &Dh_, n);
    if (has_H_) s += raw_dot(a.H.raw(), b.H.raw(), slot_w_, &DH_, n);
    return s;
}

AdaptedField ForwardHum::state(const ControlSet& c, const ComplexField& y0,
                               const AdaptedField& F) const {
    ForwardData d{y0, F, {}, false};
    return solve_forward(model_, d, &c);
}

double ForwardHum::terminal_norm_sq(const AdaptedField& y) const {
    return expected_sq_at(y, model_.steps(), model_.spatial_grid());
}

CostTerms ForwardHum::eval_J(const ControlSet& c, const ComplexField& y0,
                             const AdaptedField& F) const {
    const int n = model_.n();
    auto y = state(c, y0, F);
    auto pw = probability_dt_h(model_);
    CostTerms t;
    t.state = 0.5 * weighted_sq(y.raw(), pw, W_, n);
    t.control_h = 0.5 * weighted_sq(c.h.raw(), slot_w_, Dh_, n);
    if (has_H_) t.control_H = 0.5 * weighted_sq(c.H.raw(), slot_w_, DH_, n);
    t.endpoint = 0.5 / cfg_.eps * terminal_norm_sq(y);
    return t;
}

ForwardHum::Adjoint ForwardHum::adjoint(const AdaptedField& y) const {
    const int n = model_.n(), N = model_.steps();
    const auto& tree = model_.tree();
    BackwardData d;
    d.F = model_.field();
    auto& xi = d.F.raw();
    const auto& yr = y.raw();
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = -W_[j] * yr[j];
    const int first_leaf = tree.first_at_level(tree.depth());
    for (int j = 0; j < tree.leaf_count(); ++j) {
        auto yN = y.at(first_leaf + j, N);
        ComplexField v(n);
        for (int i = 0; i < n; ++i) v[i] = yN[i] / cfg_.eps;
        d.yT.push_back(std::move(v));
    }
    auto sol = solve_backward_bsde(model_, d);
    return {std::move(sol.y), std::move(sol.Y)};
}

ControlSet ForwardHum::gradient_from(const ControlSet& c, const Adjoint& adj) const {
    const int n = model_.n();
    const auto& mask = model_.control_mask();
    ControlSet g = zero_controls();
    auto& gh = g.h.raw();
    const auto& r = adj.r.raw();
    const auto& h = c.h.raw();
    for (std::size_t j = 0; j < gh.size(); ++j)
        gh[j] = mask[j % n] ? r[j] + Dh_[j] * h[j] : Complex{};
    zero_off_slots(gh, slot_w_, n);
    if (has_H_) {
        auto& gH = g.H.raw();
        const auto& R = adj.R.raw();
        const auto& H = c.H.raw();
        for (std::size_t j = 0; j < gH.size(); ++j) gH[j] = R[j] + DH_[j] * H[j];
        zero_off_slots(gH, slot_w_, n);
    }
    return g;
}

ControlSet ForwardHum::grad_J(const ControlSet& c, const ComplexField& y0,
                              const AdaptedField& F) const {
    return gradient_from(c, adjoint(state(c, y0, F)));
}

HumSolution ForwardHum::solve(const ComplexField& y0, const AdaptedField& F,
                              const ControlSet* warm_start) const {
    const int n = model_.n();
    const ComplexField zero0(n);
    PcgOps ops;
    ops.grad = [&](const ControlSet& c) { return grad_J(c, y0, F); };
    ops.apply_A = [&](const ControlSet& p) { return grad_J(p, zero0, AdaptedField{}); };
    ops.inner = [&](const ControlSet& a, const ControlSet& b) { return inner(a, b); };
    ops.penalty_inner = [&](const ControlSet& a, const ControlSet& b) {
        return penalty_inner(a, b);
    };
    ops.precond = [&](const ControlSet& g) {
        ControlSet z = zero_controls();
        divide_by(z.h.raw(), g.h.raw(), Dh_);
        if (has_H_) divide_by(z.H.raw(), g.H.raw(), DH_);
        return z;
    };
    ops.J = [&](const ControlSet& c) { return eval_J(c, y0, F).total(); };

    ControlSet c0 = warm_start ? *warm_start : zero_controls();
    auto res = pcg(ops, std::move(c0), cfg_);

    HumSolution s;
    s.eps = cfg_.eps;
    s.controls = std::move(res.c);
    s.iterations = res.iterations;
    s.converged = res.converged;
    s.grad_rel = res.grad_rel;
    s.J_history = std::move(res.J_history);
    s.y = state(s.controls, y0, F);
    auto adj = adjoint(s.y);
    auto g = gradient_from(s.controls, adj);
    // h + chi D^{-1} r = D^{-1} g, measured in the penalty norm
    ControlSet dg = ops.precond(g);
    s.defect_h = std::sqrt(std::max(raw_dot(dg.h.raw(), dg.h.raw(), slot_w_, &Dh_, n), 0.0));
    if (has_H_)
        s.defect_H = std::sqrt(std::max(raw_dot(dg.H.raw(), dg.H.raw(), slot_w_, &DH_, n), 0.0));
    s.control_scale = std::sqrt(std::max(penalty_inner(s.controls, s.controls), 0.0));
    s.adjoint = std::move(adj.r);
    s.adjoint_martingale = std::move(adj.R);
    s.cost = eval_J(s.controls, y0, F);
    s.endpoint_residual = terminal_norm_sq(s.y);
    return s;
}

DualityReport ForwardHum::duality(const HumSolution& s, const ComplexField& y0,
                                  const AdaptedField& F) const {
    const int n = model_.n();
    auto pw = probability_dt_h(model_);
    DualityReport d;
    d.lhs = penalty_inner(s.controls, s.controls) + weighted_sq(s.y.raw(), pw, W_, n) +
            terminal_norm_sq(s.y) / cfg_.eps;
    d.rhs = l2_inner(y0, s.adjoint.at(0, 0), model_.spatial_grid()).real();
    if (!F.empty()) d.rhs += weighted_re_dot(F.raw(), s.adjoint.raw(), slot_w_, n);
    d.defect = std::abs(d.lhs - d.rhs) / (std::abs(d.rhs) + cfg_.duality_floor);
    return d;
}

CostReport ForwardHum::cost_report(const HumSolution& s, const ComplexField& y0,
                                   const AdaptedField& F) const {
    const int N = model_.steps();
    const auto& p = ws_.params();
    CostReport r;
    std::span<const char> mask(model_.control_mask());
    r.lhs.emplace_back("state", weighted_seminorm(s.y, ws_, kPowersState, {0, N - 1}));
    r.lhs.emplace_back("control_h",
                       weighted_seminorm(s.controls.h, ws_, kPowersH, {0, N - 1}, mask));
    if (has_H_)
        r.lhs.emplace_back("control_H",
                           weighted_seminorm(s.controls.H, ws_, kPowersBigH, {0, N - 1}));
    const WeightPowers init{-2.0, -2.0, -3.0, 0.0, -2.0 * p.mu * (p.offset() + 1.0)};
    std::vector<ComplexField> path0{y0};
    r.rhs.emplace_back("initial", weighted_seminorm(std::span<const ComplexField>(path0), ws_,
                                                    init, {0, 0, false}));
    r.rhs.emplace_back("source",
                       F.empty() ? 0.0 : weighted_seminorm(F, ws_, kPowersH, {0, N - 1}));
    finish_report(r);
    return r;
}

// ===================================================================== backward

BackwardHum::BackwardHum(const SpdeModel& model, const WeightParams& params,
                         PenalizationConfig cfg)
    : model_(model),
      cfg_(cfg),
      beta_((check_weights_fit(model, params), cfg.validate(),
             build_beta(model.geometry(), model.spatial_grid()))),
      ws_(build_weight_set(beta_, model.geometry(), params, model.spatial_grid(),
                           model.time_grid(), WeightVariant::backward())),
      ws_eps_(build_weight_set(beta_, model.geometry(), params, model.spatial_grid(),
                               model.time_grid(), WeightVariant::backward_eps(cfg.eps))) {
    const int N = model.steps();
    auto pw = probability_dt_h(model);
    slot_w_ = slot_range(model, pw, 1, N);
    Dh_ = slot_table(model, WeightTable(ws_, kPowersH, 1, N), 1, N, &model.control_mask());
    W_ = N >= 2 ? slot_table(model, WeightTable(ws_eps_, kPowersState, 1, N - 1), 1, N - 1, nullptr)
                : std::vector<double>(pw.size() * model.n(), 0.0);
}

ControlSet BackwardHum::zero_controls() const { return ControlSet{model_.field(), {}}; }

double BackwardHum::inner(const ControlSet& a, const ControlSet& b) const {
    return raw_dot(a.h.raw(), b.h.raw(), slot_w_, nullptr, model_.n());
}

double BackwardHum::penalty_inner(const ControlSet& a, const ControlSet& b) const {
    return raw_dot(a.h.raw(), b.h.raw(), slot_w_, &Dh_, model_.n());
}

BsdeSolution BackwardHum::state(const ControlSet& c, const BackwardData& data) const {
    return solve_backward_bsde(model_, linear_backward_data(data), &c.h);
}

CostTerms BackwardHum::eval_J(const ControlSet& c, const BackwardData& data) const {
    const int n = model_.n();
    auto sol = state(c, data);
    auto pw = probability_dt_h(model_);
    CostTerms t;
    t.state = 0.5 * weighted_sq(sol.y.raw(), pw, W_, n);
    t.control_h = 0.5 * weighted_sq(c.h.raw(), slot_w_, Dh_, n);
    t.endpoint = 0.5 / cfg_.eps * l2_norm_sq(sol.y.at(0, 0), model_.spatial_grid());
    return t;
}

AdaptedField BackwardHum::adjoint(const AdaptedField& y) const {
    const int n = model_.n();
    AdaptedField src = model_.field();
    auto& s = src.raw();
    const auto& yr = y.raw();
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = W_[j] * yr[j];
    ComplexField q0(n);
    auto y0 = y.at(0, 0);
    for (int i = 0; i < n; ++i) q0[i] = y0[i] / cfg_.eps;
    return solve_forward_random(model_, q0, &src);
}

ControlSet BackwardHum::gradient_from(const ControlSet& c, const AdaptedField& q) const {
    const int n = model_.n();
    const auto& mask = model_.control_mask();
    ControlSet g = zero_controls();
    auto& gh = g.h.raw();
    const auto& qr = q.raw();
    const auto& h = c.h.raw();
    for (std::size_t j = 0; j < gh.size(); ++j)
        gh[j] = mask[j % n] ? -qr[j] + Dh_[j] * h[j] : Complex{};
    zero_off_slots(gh, slot_w_, n);
    return g;
}

ControlSet BackwardHum::grad_J(const ControlSet& c, const BackwardData& data) const {
    return gradient_from(c, adjoint(state(c, data).y));
}

HumSolution BackwardHum::solve(const BackwardData& data, const ControlSet* warm_start) const {
    const int n = model_.n();
    BackwardData hom;
    hom.yT.assign(1, ComplexField(n));
    PcgOps ops;
    ops.grad = [&](const ControlSet& c) { return grad_J(c, data); };
    ops.apply_A = [&](const ControlSet& p) { return grad_J(p, hom); };
    ops.inner = [&](const ControlSet& a, const ControlSet& b) { return inner(a, b); };
    ops.penalty_inner = [&](const ControlSet& a, const ControlSet& b) {
        return penalty_inner(a, b);
    };
    ops.precond = [&](const ControlSet& g) {
        ControlSet z = zero_controls();
        divide_by(z.h.raw(), g.h.raw(), Dh_);
        return z;
    };
    ops.J = [&](const ControlSet& c) { return eval_J(c, data).total(); };

    ControlSet c0 = warm_start ? *warm_start : zero_controls();
    auto res = pcg(ops, std::move(c0), cfg_);

    HumSolution s;
    s.eps = cfg_.eps;
    s.controls = std::move(res.c);
    s.iterations = res.iterations;
    s.converged = res.converged;
    s.grad_rel = res.grad_rel;
    s.J_history = std::move(res.J_history);
    auto sol = state(s.controls, data);
    s.y = std::move(sol.y);
    s.Y = std::move(sol.Y);
    s.adjoint = adjoint(s.y);
    auto g = gradient_from(s.controls, s.adjoint);
    ControlSet dg = ops.precond(g);
    s.defect_h = std::sqrt(std::max(raw_dot(dg.h.raw(), dg.h.raw(), slot_w_, &Dh_, n), 0.0));
    s.control_scale = std::sqrt(std::max(penalty_inner(s.controls, s.controls), 0.0));
    s.cost = eval_J(s.controls, data);
    s.endpoint_residual = l2_norm_sq(s.y.at(0, 0), model_.spatial_grid());
    return s;
}

DualityReport BackwardHum::duality(const HumSolution& s, const BackwardData& data) const {
    const int n = model_.n(), N = model_.steps();
    const auto& tree = model_.tree();
    auto pw = probability_dt_h(model_);
    DualityReport d;
    d.lhs = penalty_inner(s.controls, s.controls) + weighted_sq(s.y.raw(), pw, W_, n) +
            l2_norm_sq(s.y.at(0, 0), model_.spatial_grid()) / cfg_.eps;
    const int first_leaf = tree.first_at_level(tree.depth());
    double term = 0.0;
    for (int j = 0; j < tree.leaf_count(); ++j) {
        const auto& yT = data.yT.size() == 1 ? data.yT[0] : data.yT.at(j);
        term += tree.probability(first_leaf + j) *
                l2_inner(yT, s.adjoint.at(first_leaf + j, N), model_.spatial_grid()).real();
    }
    d.rhs = term;
    if (!data.F.empty()) d.rhs -= weighted_re_dot(data.F.raw(), s.adjoint.raw(), slot_w_, n);
    d.defect = std::abs(d.lhs - d.rhs) / (std::abs(d.rhs) + cfg_.duality_floor);
    return d;
}

CostReport BackwardHum::cost_report(const HumSolution& s, const BackwardData& data) const {
    const int N = model_.steps();
    const auto& tree = model_.tree();
    CostReport r;
    std::span<const char> mask(model_.control_mask());
    const WeightPowers grad_w{-2.0, -2.0, -2.0, -2.0, 0.0};
    auto grad = gradient_field(s.y, model_.spatial_grid());
    r.lhs.emplace_back("martingale", N >= 2 ? weighted_seminorm(s.Y, ws_, grad_w, {1, N - 1}) : 0.0);
    r.lhs.emplace_back("gradient", weighted_seminorm(grad, ws_, grad_w, {1, N}));
    r.lhs.emplace_back("state", weighted_seminorm(s.y, ws_, kPowersState, {1, N}));
    r.lhs.emplace_back("control_h",
                       weighted_seminorm(s.controls.h, ws_, kPowersH, {1, N}, mask));
    // terminal data term, one field per leaf
    AdaptedField yT = model_.field();
    const int first_leaf = tree.first_at_level(tree.depth());
    for (int j = 0; j < tree.leaf_count(); ++j) {
        const auto& v = data.yT.size() == 1 ? data.yT[0] : data.yT.at(j);
        std::copy(v.begin(), v.end(), yT.at(first_leaf + j, N).begin());
    }
    r.rhs.emplace_back("terminal",
                       weighted_seminorm(yT, ws_, WeightPowers{-2.0, -2.0, -2.0, 0.0, 0.0},
                                         {N, N, false}));
    r.rhs.emplace_back("source",
                       data.F.empty() ? 0.0 : weighted_seminorm(data.F, ws_, kPowersH, {1, N}));
    finish_report(r);
    return r;
}

// ============================================================== entry points

CostTerms eval_J_forward(const ForwardHum& hum, const ControlSet& c, const ComplexField& y0,
                         const AdaptedField& F) {
    return hum.eval_J(c, y0, F);
}

ControlSet grad_J_forward(const ForwardHum& hum, const ControlSet& c, const ComplexField& y0,
                          const AdaptedField& F) {
    return hum.grad_J(c, y0, F);
}

HumSolution solve_penalized_forward(const ForwardHum& hum, const ComplexField& y0,
                                    const AdaptedField& F) {
    return hum.solve(y0, F);
}

HumSolution solve_penalized_backward(const BackwardHum& hum, const BackwardData& data) {
    return hum.solve(data);
}

BackwardData linear_backward_data(const BackwardData& data) {
    BackwardData d;
    d.yT = data.yT;
    d.F = data.F;
    return d;
}

}  // namespace sgl
