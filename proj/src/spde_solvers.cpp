#include "sgl/spde_solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>

#include "sgl/errors.hpp"

namespace sgl {

SpdeModel::SpdeModel(SpatialGrid sgrid, TimeGrid tgrid, int n_b, GLCoefficients coeff,
                     Geometry geometry)
    : sgrid_(sgrid),
      tgrid_(tgrid),
      layout_(std::make_shared<const TreeLayout>(build_tree(n_b, tgrid.horizon()), tgrid,
                                                 sgrid.size())),
      coeff_(std::move(coeff)),
      geometry_(geometry) {
    geometry_.validate();
    if (!(coeff_.a > 0)) throw ConfigError("GL coefficient a must be positive");
    if (!(coeff_.s0 > 0)) throw ConfigError("ellipticity bound s0 must be positive");
    if (sgrid_.left() != geometry_.domain_left || sgrid_.right() != geometry_.domain_right)
        throw ConfigError("spatial grid does not cover the domain");
    mask_.resize(sgrid_.size());
    for (int i = 0; i < sgrid_.size(); ++i) mask_[i] = geometry_.in_control_region(sgrid_.x(i));
    fwd_.reserve(tgrid_.steps() + 1);
    bwd_.reserve(tgrid_.steps() + 1);
    for (int k = 0; k <= tgrid_.steps(); ++k) {
        fwd_.emplace_back(coeff_, sgrid_, tgrid_.t(k), tgrid_.dt(), Direction::forward);
        bwd_.emplace_back(coeff_, sgrid_, tgrid_.t(k), tgrid_.dt(), Direction::backward);
    }
}

void restrict_to_control_region(const SpdeModel& model, AdaptedField& h) {
    const auto& mask = model.control_mask();
    const int n = model.n();
    auto& raw = h.raw();
    for (std::size_t j = 0; j < raw.size(); ++j)
        if (!mask[j % n]) raw[j] = Complex{};
}

namespace {

void require_layout(const SpdeModel& model, const AdaptedField& f, const char* what) {
    if (f.empty()) return;
    if (!(f.layout() == model.layout()))
        throw DimensionError(std::string(what) + " lives on a different layout");
}

void check_finite(FieldView v, int k) {
    if (!all_finite(v))
        throw NumericalError("divergence: non-finite state at time index " + std::to_string(k));
}

// dt * (F + chi h) at (node, k), accumulated into out.
void add_linear_source(const SpdeModel& model, const AdaptedField& F, const AdaptedField* h,
                       int node, int k, double scale, MutableFieldView out) {
    const int n = model.n();
    if (!F.empty()) {
        auto f = F.at(node, k);
        for (int i = 0; i < n; ++i) out[i] += scale * f[i];
    }
    if (h && !h->empty()) {
        auto hv = h->at(node, k);
        const auto& mask = model.control_mask();
        for (int i = 0; i < n; ++i)
            if (mask[i]) out[i] += scale * hv[i];
    }
}

}  // namespace

AdaptedField solve_forward(const SpdeModel& model, const ForwardData& data,
                           const ControlSet* controls) {
    const int n = model.n(), N = model.steps();
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    const double dt = model.time_grid().dt();
    if (static_cast<int>(data.y0.size()) != n) throw DimensionError("y0 size mismatch");
    require_layout(model, data.F, "F");
    const AdaptedField* h = controls ? &controls->h : nullptr;
    const AdaptedField* H = controls && !controls->H.empty() ? &controls->H : nullptr;
    if (h) require_layout(model, *h, "h");
    if (H) require_layout(model, *H, "H");
    const bool use_f = data.nl.drift_active();
    const bool use_g = data.with_diffusion_nonlinearity && data.nl.diffusion_active();

    AdaptedField y = model.field();
    std::copy(data.y0.begin(), data.y0.end(), y.at(0, 0).begin());
    check_finite(y.at(0, 0), 0);
    ComplexField rhs(n), tmp(n), jump(n);
    for (int node = 0; node < tree.node_count(); ++node) {
        if (tree.is_leaf(node) && tree.depth() > 0) continue;
        const int k0 = lay.first_index(node);
        const int k_end = std::min(k0 + lay.index_count(node), N);  // steps k -> k+1, k < k_end
        for (int k = k0; k < k_end; ++k) {
            auto yk = y.at(node, k);
            for (int i = 0; i < n; ++i) rhs[i] = yk[i];
            add_linear_source(model, data.F, h, node, k, dt, rhs);
            if (use_f) {
                apply_f(data.nl, yk, tmp);
                for (int i = 0; i < n; ++i) rhs[i] += dt * tmp[i];
            }
            if (lay.owns(node, k + 1)) {
                model.forward_step(k + 1).solve_into(rhs, y.at(node, k + 1));
                check_finite(y.at(node, k + 1), k + 1);
                continue;
            }
            // noise boundary: mean integrand over the parent interval
            std::fill(jump.begin(), jump.end(), Complex{});
            const int cnt = lay.index_count(node);
            for (int kk = k0; kk < k0 + cnt; ++kk) {
                if (use_g) {
                    apply_g(data.nl, y.at(node, kk), tmp);
                    for (int i = 0; i < n; ++i) jump[i] += tmp[i];
                }
                if (H) {
                    auto hv = H->at(node, kk);
                    for (int i = 0; i < n; ++i) jump[i] += hv[i];
                }
            }
            for (auto& v : jump) v /= cnt;
            model.forward_step(k + 1).solve_into(rhs, tmp);
            for (int w = 0; w < 2; ++w) {
                const int c = tree.child(node, w);
                const double db = tree.increment(c);
                auto yc = y.at(c, k + 1);
                for (int i = 0; i < n; ++i) yc[i] = tmp[i] + db * jump[i];
                check_finite(yc, k + 1);
            }
        }
    }
    return y;
}

namespace {

void set_terminal(const SpdeModel& model, const BackwardData& data, AdaptedField& y) {
    const auto& tree = model.tree();
    const int N = model.steps(), n = model.n();
    const int leaves = tree.leaf_count();
    if (data.yT.size() != 1 && static_cast<int>(data.yT.size()) != leaves)
        throw DimensionError("terminal data: one field per leaf (or one shared field)");
    const int first_leaf = tree.first_at_level(tree.depth());
    for (int j = 0; j < leaves; ++j) {
        const auto& src = data.yT.size() == 1 ? data.yT[0] : data.yT[j];
        if (static_cast<int>(src.size()) != n) throw DimensionError("terminal field size");
        auto dst = y.at(first_leaf + j, N);
        std::copy(src.begin(), src.end(), dst.begin());
        check_finite(dst, N);
    }
}

// v = y(node,k) - dt S(node,k), S = F + chi h + Upsilon(y, Y).
void backward_value(const SpdeModel& model, const BackwardData& data, const AdaptedField* h,
                    const AdaptedField& y, const AdaptedField& Y, int node, int k,
                    MutableFieldView v, ComplexField& tmp) {
    const int n = model.n();
    const double dt = model.time_grid().dt();
    auto yk = y.at(node, k);
    for (int i = 0; i < n; ++i) v[i] = yk[i];
    add_linear_source(model, data.F, h, node, k, -dt, v);
    if (data.nl.backward_active()) {
        apply_upsilon(data.nl, yk, Y.at(node, k), tmp);
        for (int i = 0; i < n; ++i) v[i] -= dt * tmp[i];
    }
}

}  // namespace

BsdeSolution solve_backward_bsde(const SpdeModel& model, const BackwardData& data,
                                 const AdaptedField* h) {
    const int n = model.n(), N = model.steps();
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    require_layout(model, data.F, "F");
    if (h) require_layout(model, *h, "h");
    BsdeSolution out{model.field(), model.field()};
    auto& y = out.y;
    auto& Y = out.Y;
    set_terminal(model, data, y);
    const double sq = std::sqrt(tree.dtau());
    ComplexField v0(n), v1(n), tmp(n);
    for (int node = tree.node_count() - 1; node >= 0; --node) {
        if (tree.is_leaf(node) && tree.depth() > 0) continue;
        const int k0 = lay.first_index(node);
        const int k_last = std::min(k0 + lay.index_count(node), N) - 1;
        for (int k = k_last; k >= k0; --k) {
            if (lay.owns(node, k + 1)) {
                backward_value(model, data, h, y, Y, node, k + 1, v0, tmp);
                model.backward_step(k + 1).solve_into(v0, y.at(node, k));
                check_finite(y.at(node, k), k);
                continue;
            }
            const int c0 = tree.child(node, 0), c1 = tree.child(node, 1);
            backward_value(model, data, h, y, Y, c0, k + 1, v0, tmp);
            backward_value(model, data, h, y, Y, c1, k + 1, v1, tmp);
            ComplexField mean(n), z(n);
            for (int i = 0; i < n; ++i) {
                mean[i] = 0.5 * (v0[i] + v1[i]);
                z[i] = (v0[i] - v1[i]) / (2.0 * sq);
            }
            for (int kk = k0; kk < k0 + lay.index_count(node); ++kk) {
                auto Yn = Y.at(node, kk);
                std::copy(z.begin(), z.end(), Yn.begin());
            }
            model.backward_step(k + 1).solve_into(mean, y.at(node, k));
            check_finite(y.at(node, k), k);
            check_finite(z, k);
        }
    }
    return out;
}

AdaptedField solve_forward_random(const SpdeModel& model, const ComplexField& initial,
                                  const AdaptedField* source) {
    const int n = model.n(), N = model.steps();
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    const double dt = model.time_grid().dt();
    if (static_cast<int>(initial.size()) != n) throw DimensionError("initial field size");
    if (source) require_layout(model, *source, "source");
    AdaptedField q = model.field();
    std::copy(initial.begin(), initial.end(), q.at(0, 0).begin());
    ComplexField rhs(n);
    for (int node = 0; node < tree.node_count(); ++node) {
        if (tree.is_leaf(node) && tree.depth() > 0) continue;
        const int k0 = lay.first_index(node);
        const int k_end = std::min(k0 + lay.index_count(node), N);
        for (int k = k0; k < k_end; ++k) {
            auto qk = q.at(node, k);
            for (int i = 0; i < n; ++i) rhs[i] = qk[i];
            if (source && !source->empty()) {
                auto s = source->at(node, k);
                for (int i = 0; i < n; ++i) rhs[i] += dt * s[i];
            }
            if (lay.owns(node, k + 1)) {
                model.forward_step(k + 1).solve_into(rhs, q.at(node, k + 1));
                check_finite(q.at(node, k + 1), k + 1);
                continue;
            }
            auto first = q.at(tree.child(node, 0), k + 1);
            model.forward_step(k + 1).solve_into(rhs, first);
            check_finite(first, k + 1);
            auto second = q.at(tree.child(node, 1), k + 1);
            std::copy(first.begin(), first.end(), second.begin());
        }
    }
    return q;
}

// ------------------------------------------------------------------ oracle

OracleResult bsde_bruteforce_oracle(const SpdeModel& model, const BackwardData& data,
                                    const AdaptedField* h, std::size_t max_unknowns) {
    using Trip = Eigen::Triplet<Complex>;
    const int n = model.n(), N = model.steps();
    const auto& lay = model.layout();
    const auto& tree = model.tree();
    const double dt = model.time_grid().dt();
    require_layout(model, data.F, "F");
    if (h) require_layout(model, *h, "h");
    if (data.nl.backward_active() && data.nl.kind != NonlinearKind::linear)
        throw ConfigError("oracle: Upsilon must be zero or linear");
    const double ups = data.nl.backward_active() ? 0.5 * data.nl.kappa2 : 0.0;
    const bool tree_noise = tree.depth() > 0;

    // block numbering: y at every non-terminal slot, Y per non-leaf node
    std::vector<long> yblk(lay.slot_count(), -1);
    std::vector<long> Yblk(tree.node_count(), -1);
    long blocks = 0;
    for (int node = 0; node < tree.node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k)
            if (k < N) yblk[lay.slot(node, k)] = blocks++;
    }
    if (tree_noise)
        for (int node = 0; node < tree.first_at_level(tree.depth()); ++node) Yblk[node] = blocks++;
    const std::size_t U = static_cast<std::size_t>(blocks) * n;
    if (U > max_unknowns)
        throw ConfigError("oracle: " + std::to_string(U) + " unknowns exceed the cap of " +
                          std::to_string(max_unknowns));

    AdaptedField yterm = model.field();
    set_terminal(model, data, yterm);

    std::vector<Trip> trips;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<long>(U));
    long row_block = 0;
    ComplexField lin(n);
    // y_{k+1} on `node` enters as (-1 + dt ups) y; Y_{node'} enters with dt ups.
    auto add_next = [&](long row, int node, int k) {
        const double cy = -1.0 + dt * ups;
        const long b = yblk[lay.slot(node, k)];
        for (int i = 0; i < n; ++i) {
            if (b >= 0)
                trips.emplace_back(row + i, b * n + i, cy);
            else
                rhs[row + i] -= cy * yterm.at(node, k)[i];
        }
        std::fill(lin.begin(), lin.end(), Complex{});
        add_linear_source(model, data.F, h, node, k, dt, lin);
        for (int i = 0; i < n; ++i) rhs[row + i] -= lin[i];
    };
    auto add_B = [&](long row, long col_block, int kstep) {
        Tridiagonal M = gl_operator_matrix(model.coefficients(), model.spatial_grid(),
                                           model.time_grid().t(kstep), Direction::backward);
        // B = I + dt L_backward
        for (int i = 0; i < n; ++i) {
            trips.emplace_back(row + i, col_block * n + i, 1.0 + dt * M.diag[i]);
            if (i > 0) trips.emplace_back(row + i, col_block * n + i - 1, dt * M.lower[i]);
            if (i + 1 < n) trips.emplace_back(row + i, col_block * n + i + 1, dt * M.upper[i]);
        }
    };
    auto add_Y = [&](long row, int owner, Complex coef) {
        const long b = Yblk[owner];
        if (b < 0 || coef == Complex{}) return;
        for (int i = 0; i < n; ++i) trips.emplace_back(row + i, b * n + i, coef);
    };

    for (int node = 0; node < tree.node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k) {
            if (k >= N) continue;
            const long yb = yblk[lay.slot(node, k)];
            if (lay.owns(node, k + 1)) {
                const long row = (row_block++) * n;
                add_B(row, yb, k + 1);
                add_next(row, node, k + 1);
                add_Y(row, node, dt * ups);
                continue;
            }
            for (int w = 0; w < 2; ++w) {
                const int c = tree.child(node, w);
                const long row = (row_block++) * n;
                add_B(row, yb, k + 1);
                add_Y(row, node, tree.increment(c));
                add_next(row, c, k + 1);
                add_Y(row, c, dt * ups);
            }
        }
    }
    if (static_cast<std::size_t>(row_block) * n != U)
        throw NumericalError("oracle: equation count does not match unknown count");

    Eigen::SparseMatrix<Complex> A(static_cast<long>(U), static_cast<long>(U));
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::VectorXcd x;
    if (U <= 4000) {
        Eigen::MatrixXcd dense(A);
        x = dense.partialPivLu().solve(rhs);
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw NumericalError("oracle: factorization failed");
        x = lu.solve(rhs);
    }

    OracleResult res{{model.field(), model.field()}, 0.0, U};
    res.residual = (A * x - rhs).cwiseAbs().maxCoeff();
    auto& y = res.solution.y;
    y = yterm;
    for (int node = 0; node < tree.node_count(); ++node) {
        const int k0 = lay.first_index(node);
        for (int k = k0; k < k0 + lay.index_count(node); ++k) {
            const long b = yblk[lay.slot(node, k)];
            if (b < 0) continue;
            auto dst = y.at(node, k);
            for (int i = 0; i < n; ++i) dst[i] = x[b * n + i];
        }
        if (Yblk[node] >= 0)
            for (int k = k0; k < k0 + lay.index_count(node); ++k) {
                auto dst = res.solution.Y.at(node, k);
                for (int i = 0; i < n; ++i) dst[i] = x[Yblk[node] * n + i];
            }
    }
    return res;
}

AdaptedField absorb_diffusion_nonlinearity(const AdaptedField& y, const AdaptedField& H,
                                           const NonlinearitySpec& nl) {
    if (y.empty() || H.empty() || !(y.layout() == H.layout()))
        throw DimensionError("absorb: y and H must share a layout");
    AdaptedField out = H;
    if (!nl.diffusion_active()) return out;
    const auto& yr = y.raw();
    auto& o = out.raw();
    for (std::size_t j = 0; j < o.size(); ++j) o[j] -= nl.g(yr[j]);
    return out;
}

double max_abs_difference(const AdaptedField& a, const AdaptedField& b) {
    if (a.raw().size() != b.raw().size()) throw DimensionError("max_abs_difference: sizes");
    double m = 0.0;
    for (std::size_t j = 0; j < a.raw().size(); ++j)
        m = std::max(m, std::abs(a.raw()[j] - b.raw()[j]));
    return m;
}

}  // namespace sgl
