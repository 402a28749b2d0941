#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace sgl {

using Complex = std::complex<double>;
// One complex value per interior spatial node.
using ComplexField = std::vector<Complex>;
using FieldView = std::span<const Complex>;
using MutableFieldView = std::span<Complex>;

enum class Direction { forward, backward };

// Uniform grid on [left, right] with n_interior unknowns; boundary nodes are
// implicit and carry the homogeneous Dirichlet value.
class SpatialGrid {
public:
    SpatialGrid(double left, double right, int n_interior);

    int size() const noexcept { return n_; }
    double left() const noexcept { return left_; }
    double right() const noexcept { return right_; }
    double spacing() const noexcept { return h_; }
    // Interior node i in [0, size()).
    double x(int i) const noexcept { return left_ + (i + 1) * h_; }
    // Node j in [0, size()+1], boundary nodes included.
    double x_full(int j) const noexcept { return left_ + j * h_; }
    std::vector<double> interior_nodes() const;

    bool operator==(const SpatialGrid& o) const noexcept {
        return n_ == o.n_ && left_ == o.left_ && right_ == o.right_;
    }

private:
    double left_;
    double right_;
    int n_;
    double h_;
};

// n_steps uniform steps on [0, T]; n_steps divisible by 4 so T/4, T/2, 3T/4
// are nodes.
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps);

    int steps() const noexcept { return n_; }
    double horizon() const noexcept { return T_; }
    double dt() const noexcept { return dt_; }
    double t(int k) const noexcept { return k == n_ ? T_ : k * dt_; }

    bool operator==(const TimeGrid& o) const noexcept { return n_ == o.n_ && T_ == o.T_; }

private:
    double T_;
    int n_;
    double dt_;
};

// Diffusion a > 0, dispersion b, and the 1D principal coefficient a11(t, x)
// with certified lower bound s0.
struct GLCoefficients {
    double a = 1.0;
    double b = 0.0;
    std::function<double(double t, double x)> a11 = [](double, double) { return 1.0; };
    double s0 = 1.0;

    static GLCoefficients constant(double a, double b, double a11_value = 1.0);
};

// Flux coefficients a11 at cell midpoints x_{j+1/2}, j = 0..n, averaged from
// nodal samples (boundary nodes included). Throws NumericalError if any nodal
// sample falls below s0.
std::vector<double> midpoint_coefficients(const GLCoefficients& coeff, const SpatialGrid& grid,
                                          double t);

// D(y)_i = [a_{i+1/2}(y_{i+1}-y_i) - a_{i-1/2}(y_i-y_{i-1})]/h^2 with zero ghosts.
ComplexField apply_flux_laplacian(FieldView y, std::span<const double> mid, double h);

// Forward: +(a+ib) D(y). Backward: -(a-ib) D(y).
ComplexField apply_gl_operator(FieldView y, const GLCoefficients& coeff, const SpatialGrid& grid,
                               double t, Direction dir);

// Tridiagonal matrix of the operator returned by apply_gl_operator.
struct Tridiagonal {
    std::vector<Complex> lower;  // lower[i] multiplies y_{i-1}; lower[0] unused
    std::vector<Complex> diag;
    std::vector<Complex> upper;  // upper[i] multiplies y_{i+1}; upper[n-1] unused
    ComplexField apply(FieldView y) const;
};

Tridiagonal gl_operator_matrix(const GLCoefficients& coeff, const SpatialGrid& grid, double t,
                               Direction dir);

// Solves x from M x = rhs by Thomas elimination.
ComplexField solve_tridiagonal(const Tridiagonal& M, FieldView rhs);

// One stable implicit step in the marching direction of `dir`:
//   forward:  (I - dt (a+ib) D) u = rhs
//   backward: (I - dt (a-ib) D) u = rhs   (i.e. I + dt L_backward)
// with D assembled at time t.
ComplexField implicit_step_solve(FieldView rhs, const GLCoefficients& coeff,
                                 const SpatialGrid& grid, double t, double dt, Direction dir);

// Prefactored step operator; reused across the nodes of a tree level.
class StepSolver {
public:
    StepSolver(const GLCoefficients& coeff, const SpatialGrid& grid, double t, double dt,
               Direction dir);
    ComplexField solve(FieldView rhs) const;
    void solve_into(FieldView rhs, MutableFieldView out) const;

private:
    std::vector<Complex> lower_;
    std::vector<Complex> upper_;
    std::vector<Complex> inv_pivot_;
};

// h * sum f_i conj(g_i).
Complex l2_inner(FieldView f, FieldView g, const SpatialGrid& grid);
double l2_norm_sq(FieldView f, const SpatialGrid& grid);

// Centered differences at interior nodes, one-sided at the first/last interior node.
ComplexField discrete_gradient(FieldView y, const SpatialGrid& grid);

bool all_finite(FieldView y) noexcept;

}  // namespace sgl
