#include "sgl/discretization.hpp"

#include <cmath>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

SpatialGrid::SpatialGrid(double left, double right, int n_interior)
    : left_(left), right_(right), n_(n_interior) {
    if (!(right > left)) throw ConfigError("spatial grid: right endpoint must exceed left");
    if (n_interior < 3) throw ConfigError("spatial grid: n_interior must be >= 3");
    h_ = (right - left) / (n_interior + 1);
}

std::vector<double> SpatialGrid::interior_nodes() const {
    std::vector<double> xs(n_);
    for (int i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
}

TimeGrid::TimeGrid(double horizon, int n_steps) : T_(horizon), n_(n_steps) {
    if (!(horizon > 0)) throw ConfigError("time grid: horizon must be positive");
    if (n_steps < 4 || n_steps % 4 != 0)
        throw ConfigError("time grid: n_steps must be >= 4 and divisible by 4");
    dt_ = horizon / n_steps;
}

GLCoefficients GLCoefficients::constant(double a, double b, double a11_value) {
    GLCoefficients c;
    c.a = a;
    c.b = b;
    c.a11 = [a11_value](double, double) { return a11_value; };
    c.s0 = a11_value;
    return c;
}

std::vector<double> midpoint_coefficients(const GLCoefficients& coeff, const SpatialGrid& grid,
                                          double t) {
    if (!(coeff.a > 0)) throw NumericalError("ellipticity violation: a must be positive");
    if (!(coeff.s0 > 0)) throw NumericalError("ellipticity violation: s0 must be positive");
    const int n = grid.size();
    std::vector<double> nodal(n + 2);
    for (int j = 0; j <= n + 1; ++j) {
        nodal[j] = coeff.a11(t, grid.x_full(j));
        if (!(nodal[j] >= coeff.s0)) {
            std::ostringstream msg;
            msg << "ellipticity violation: a11(" << t << ", " << grid.x_full(j)
                << ") = " << nodal[j] << " < s0 = " << coeff.s0;
            throw NumericalError(msg.str());
        }
    }
    std::vector<double> mid(n + 1);
    for (int j = 0; j <= n; ++j) mid[j] = 0.5 * (nodal[j] + nodal[j + 1]);
    return mid;
}

ComplexField apply_flux_laplacian(FieldView y, std::span<const double> mid, double h) {
    const int n = static_cast<int>(y.size());
    if (static_cast<int>(mid.size()) != n + 1)
        throw DimensionError("flux laplacian: coefficient count must be n+1");
    ComplexField out(n);
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 0; i < n; ++i) {
        const Complex left = i > 0 ? y[i - 1] : Complex{};
        const Complex right = i + 1 < n ? y[i + 1] : Complex{};
        out[i] = (mid[i + 1] * (right - y[i]) - mid[i] * (y[i] - left)) * inv_h2;
    }
    return out;
}

namespace {

Complex operator_factor(const GLCoefficients& c, Direction dir) {
    return dir == Direction::forward ? Complex(c.a, c.b) : -Complex(c.a, -c.b);
}

void check_size(FieldView y, const SpatialGrid& grid) {
    if (static_cast<int>(y.size()) != grid.size())
        throw DimensionError("field size does not match spatial grid");
}

}  // namespace

ComplexField apply_gl_operator(FieldView y, const GLCoefficients& coeff, const SpatialGrid& grid,
                               double t, Direction dir) {
    check_size(y, grid);
    auto mid = midpoint_coefficients(coeff, grid, t);
    ComplexField d = apply_flux_laplacian(y, mid, grid.spacing());
    const Complex c = operator_factor(coeff, dir);
    for (auto& v : d) v *= c;
    return d;
}

ComplexField Tridiagonal::apply(FieldView y) const {
    const int n = static_cast<int>(diag.size());
    if (static_cast<int>(y.size()) != n) throw DimensionError("tridiagonal apply: size mismatch");
    ComplexField out(n);
    for (int i = 0; i < n; ++i) {
        Complex v = diag[i] * y[i];
        if (i > 0) v += lower[i] * y[i - 1];
        if (i + 1 < n) v += upper[i] * y[i + 1];
        out[i] = v;
    }
    return out;
}

Tridiagonal gl_operator_matrix(const GLCoefficients& coeff, const SpatialGrid& grid, double t,
                               Direction dir) {
    const int n = grid.size();
    auto mid = midpoint_coefficients(coeff, grid, t);
    const Complex c = operator_factor(coeff, dir);
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Tridiagonal m;
    m.lower.assign(n, Complex{});
    m.diag.assign(n, Complex{});
    m.upper.assign(n, Complex{});
    for (int i = 0; i < n; ++i) {
        m.diag[i] = -c * (mid[i] + mid[i + 1]) * inv_h2;
        if (i > 0) m.lower[i] = c * mid[i] * inv_h2;
        if (i + 1 < n) m.upper[i] = c * mid[i + 1] * inv_h2;
    }
    return m;
}

ComplexField solve_tridiagonal(const Tridiagonal& M, FieldView rhs) {
    const int n = static_cast<int>(M.diag.size());
    if (static_cast<int>(rhs.size()) != n) throw DimensionError("tridiagonal solve: size mismatch");
    std::vector<Complex> c(n);
    ComplexField x(rhs.begin(), rhs.end());
    Complex pivot = M.diag[0];
    if (pivot == Complex{}) throw NumericalError("tridiagonal solve: zero pivot");
    c[0] = M.upper[0] / pivot;
    x[0] /= pivot;
    for (int i = 1; i < n; ++i) {
        pivot = M.diag[i] - M.lower[i] * c[i - 1];
        if (pivot == Complex{}) throw NumericalError("tridiagonal solve: zero pivot");
        c[i] = i + 1 < n ? M.upper[i] / pivot : Complex{};
        x[i] = (x[i] - M.lower[i] * x[i - 1]) / pivot;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
    return x;
}

StepSolver::StepSolver(const GLCoefficients& coeff, const SpatialGrid& grid, double t, double dt,
                       Direction dir) {
    if (!(dt > 0)) throw ConfigError("implicit step: dt must be positive");
    // Both marching directions diffuse: I - dt * c * D with Re c = a > 0.
    const Complex c = dir == Direction::forward ? Complex(coeff.a, coeff.b)
                                                : Complex(coeff.a, -coeff.b);
    const int n = grid.size();
    auto mid = midpoint_coefficients(coeff, grid, t);
    const double s = dt / (grid.spacing() * grid.spacing());
    lower_.assign(n, Complex{});
    upper_.assign(n, Complex{});
    inv_pivot_.assign(n, Complex{});
    std::vector<Complex> diag(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = 1.0 + c * s * (mid[i] + mid[i + 1]);
        if (i > 0) lower_[i] = -c * s * mid[i];
        if (i + 1 < n) upper_[i] = -c * s * mid[i + 1];
    }
    // Forward elimination factors; strictly diagonally dominant so no pivoting.
    Complex prev_c{};
    for (int i = 0; i < n; ++i) {
        const Complex pivot = i == 0 ? diag[0] : diag[i] - lower_[i] * prev_c;
        if (std::abs(pivot) == 0.0) throw NumericalError("implicit step: singular system");
        inv_pivot_[i] = 1.0 / pivot;
        prev_c = upper_[i] * inv_pivot_[i];
        upper_[i] = prev_c;  // store c_i
    }
}

void StepSolver::solve_into(FieldView rhs, MutableFieldView out) const {
    const int n = static_cast<int>(inv_pivot_.size());
    if (static_cast<int>(rhs.size()) != n || static_cast<int>(out.size()) != n)
        throw DimensionError("implicit step: size mismatch");
    out[0] = rhs[0] * inv_pivot_[0];
    for (int i = 1; i < n; ++i) out[i] = (rhs[i] - lower_[i] * out[i - 1]) * inv_pivot_[i];
    for (int i = n - 2; i >= 0; --i) out[i] -= upper_[i] * out[i + 1];
}

ComplexField StepSolver::solve(FieldView rhs) const {
    ComplexField out(rhs.size());
    solve_into(rhs, out);
    return out;
}

ComplexField implicit_step_solve(FieldView rhs, const GLCoefficients& coeff,
                                 const SpatialGrid& grid, double t, double dt, Direction dir) {
    check_size(rhs, grid);
    return StepSolver(coeff, grid, t, dt, dir).solve(rhs);
}

Complex l2_inner(FieldView f, FieldView g, const SpatialGrid& grid) {
    if (f.size() != g.size() || static_cast<int>(f.size()) != grid.size())
        throw DimensionError("l2_inner: field sizes differ from grid");
    Complex s{};
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::conj(g[i]);
    return grid.spacing() * s;
}

double l2_norm_sq(FieldView f, const SpatialGrid& grid) {
    check_size(f, grid);
    double s = 0.0;
    for (const auto& v : f) s += std::norm(v);
    return grid.spacing() * s;
}

ComplexField discrete_gradient(FieldView y, const SpatialGrid& grid) {
    check_size(y, grid);
    const int n = grid.size();
    const double h = grid.spacing();
    ComplexField g(n);
    g[0] = (y[1] - y[0]) / h;
    g[n - 1] = (y[n - 1] - y[n - 2]) / h;
    for (int i = 1; i + 1 < n; ++i) g[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
    return g;
}

bool all_finite(FieldView y) noexcept {
    for (const auto& v : y)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

}  // namespace sgl
