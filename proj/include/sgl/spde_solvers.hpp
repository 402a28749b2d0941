#pragma once

#include <memory>
#include <vector>

#include "sgl/discretization.hpp"
#include "sgl/nonlinearity.hpp"
#include "sgl/scenario_tree.hpp"
#include "sgl/weights.hpp"

namespace sgl {

// Grids bound to a tree, coefficients, the G0 node mask and prefactored step
// solvers (index k assembles the operator at t_k).
class SpdeModel {
public:
    SpdeModel(SpatialGrid sgrid, TimeGrid tgrid, int n_b, GLCoefficients coeff, Geometry geometry);

    const SpatialGrid& spatial_grid() const noexcept { return sgrid_; }
    const TimeGrid& time_grid() const noexcept { return tgrid_; }
    const ScenarioTree& tree() const noexcept { return layout_->tree(); }
    const TreeLayout& layout() const noexcept { return *layout_; }
    const std::shared_ptr<const TreeLayout>& layout_ptr() const noexcept { return layout_; }
    const GLCoefficients& coefficients() const noexcept { return coeff_; }
    const Geometry& geometry() const noexcept { return geometry_; }
    // 1 at interior nodes inside G0.
    const std::vector<char>& control_mask() const noexcept { return mask_; }
    const StepSolver& forward_step(int k) const { return fwd_.at(k); }
    const StepSolver& backward_step(int k) const { return bwd_.at(k); }

    AdaptedField field() const { return AdaptedField(layout_); }
    int n() const noexcept { return sgrid_.size(); }
    int steps() const noexcept { return tgrid_.steps(); }

private:
    SpatialGrid sgrid_;
    TimeGrid tgrid_;
    std::shared_ptr<const TreeLayout> layout_;
    GLCoefficients coeff_;
    Geometry geometry_;
    std::vector<char> mask_;
    std::vector<StepSolver> fwd_;
    std::vector<StepSolver> bwd_;
};

// h on G0 nodes; H on all nodes (forward problems only; may be empty).
struct ControlSet {
    AdaptedField h;
    AdaptedField H;
};

// Zeroes h outside G0.
void restrict_to_control_region(const SpdeModel& model, AdaptedField& h);

struct ForwardData {
    ComplexField y0;
    AdaptedField F;  // empty means zero; indices 0..N-1 are used
    NonlinearitySpec nl;
    bool with_diffusion_nonlinearity = true;  // false drops g (the H-only form)
};

struct BackwardData {
    // One terminal field per leaf, or a single field shared by all leaves.
    std::vector<ComplexField> yT;
    AdaptedField F;  // empty means zero; indices 1..N are used
    NonlinearitySpec nl;
};

struct BsdeSolution {
    AdaptedField y;
    // Martingale density, constant over the indices a node owns, zero at leaves.
    AdaptedField Y;
};

// y_{k+1} = A_{k+1}^{-1}(y_k + dt S_k), A = I - dt (a+ib) D, S = F + chi h + f(y).
// Crossing into a child c adds dB_c * mean over the parent interval of (g(y) + H).
AdaptedField solve_forward(const SpdeModel& model, const ForwardData& data,
                           const ControlSet* controls = nullptr);

// For k = N-1 .. 0 with v = y_{k+1} - dt S_{k+1} on the owner(s) of k+1:
//   y_k = B_{k+1}^{-1} E[v], B = I - dt (a-ib) D, and at a noise boundary
//   Y = (v+ - v-)/(2 sqrt(dtau)). S = F + chi h + Upsilon(y, Y) with the
//   already known level (one-step lag).
BsdeSolution solve_backward_bsde(const SpdeModel& model, const BackwardData& data,
                                 const AdaptedField* h = nullptr);

// Pathwise forward march q_{k+1} = A_{k+1}^{-1}(q_k + dt src_k) computed once
// per node; children inherit the parent's value (no dB term).
AdaptedField solve_forward_random(const SpdeModel& model, const ComplexField& initial,
                                  const AdaptedField* source = nullptr);

struct OracleResult {
    BsdeSolution solution;
    double residual = 0.0;  // max |assembled residual| at the returned solution
    std::size_t unknowns = 0;
};

// Assembles the implicit backward recursion and the two-branch martingale
// representation as one linear system over all node unknowns and solves it
// directly. Upsilon must be zero or linear. Refuses more than max_unknowns
// complex unknowns.
OracleResult bsde_bruteforce_oracle(const SpdeModel& model, const BackwardData& data,
                                    const AdaptedField* h = nullptr,
                                    std::size_t max_unknowns = 10000);

// H* = H - g(y) nodewise.
AdaptedField absorb_diffusion_nonlinearity(const AdaptedField& y, const AdaptedField& H,
                                           const NonlinearitySpec& nl);

// Max nodewise |a - b| over every slot.
double max_abs_difference(const AdaptedField& a, const AdaptedField& b);

}  // namespace sgl
