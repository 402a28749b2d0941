#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sgl/quadrature.hpp"
#include "sgl/spde_solvers.hpp"
#include "sgl/weights.hpp"

namespace sgl {

struct PenalizationConfig {
    double eps = 1e-3;
    double cg_tol = 1e-8;
    int cg_max_iters = 500;
    double duality_floor = 1e-30;
    void validate() const;  // throws ConfigError
};

// Weighted terms of J_eps. For the backward problem control_H is 0 and
// endpoint is the initial penalty.
struct CostTerms {
    double state = 0.0;
    double control_h = 0.0;
    double control_H = 0.0;
    double endpoint = 0.0;
    double total() const noexcept { return state + control_h + control_H + endpoint; }
};

struct HumSolution {
    double eps = 0.0;
    ControlSet controls;
    AdaptedField y;
    AdaptedField Y;                   // backward problems
    AdaptedField adjoint;             // r (forward) or q (backward)
    AdaptedField adjoint_martingale;  // R (forward)
    CostTerms cost;
    double endpoint_residual = 0.0;  // E||y(T)||^2 (forward) or E||y(0)||^2 (backward)
    double defect_h = 0.0;           // || h - (optimality form) || in the penalty norm
    double defect_H = 0.0;
    double control_scale = 0.0;  // || controls || in the penalty norm
    double grad_rel = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> J_history;
};

struct DualityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double defect = 0.0;
};

// Named weighted norms of a cost bound and their ratio.
struct CostReport {
    std::vector<std::pair<std::string, double>> lhs;
    std::vector<std::pair<std::string, double>> rhs;
    double lhs_total = 0.0;
    double rhs_total = 0.0;
    double ratio = 0.0;  // 0 when both totals vanish
    double term(const std::string& name) const;
};

// Penalty powers shared by the HUM layer and the source norms.
inline constexpr WeightPowers kPowersH{-2.0, -3.0, -4.0, -3.0, 0.0};      // h and F
inline constexpr WeightPowers kPowersBigH{-2.0, -2.0, -2.0, -3.0, 0.0};   // H
inline constexpr WeightPowers kPowersState{-2.0, 0.0, 0.0, 0.0, 0.0};

// Forward problem: y0, F given; controls (h on G0, H on G). State penalty uses
// theta_eps over k = 1..N-1, control penalties the forward weights over
// k = 0..N-1, plus (1/2eps) E||y(T)||^2. Gradient via the backward adjoint
// with source -theta_eps^{-2} y and terminal y(T)/eps.
class ForwardHum {
public:
    ForwardHum(const SpdeModel& model, const WeightParams& params, PenalizationConfig cfg);

    const SpdeModel& model() const noexcept { return model_; }
    const PenalizationConfig& config() const noexcept { return cfg_; }
    const WeightSet& weights() const noexcept { return ws_; }
    const WeightSet& weights_eps() const noexcept { return ws_eps_; }
    const BetaProfile& beta() const noexcept { return beta_; }

    ControlSet zero_controls() const;
    double inner(const ControlSet& a, const ControlSet& b) const;
    // <D a, b>, the penalty inner product
    double penalty_inner(const ControlSet& a, const ControlSet& b) const;

    AdaptedField state(const ControlSet& c, const ComplexField& y0, const AdaptedField& F) const;
    CostTerms eval_J(const ControlSet& c, const ComplexField& y0, const AdaptedField& F) const;
    // Gradient in the inner() representation.
    ControlSet grad_J(const ControlSet& c, const ComplexField& y0, const AdaptedField& F) const;

    HumSolution solve(const ComplexField& y0, const AdaptedField& F,
                      const ControlSet* warm_start = nullptr) const;
    DualityReport duality(const HumSolution& s, const ComplexField& y0,
                          const AdaptedField& F) const;
    CostReport cost_report(const HumSolution& s, const ComplexField& y0,
                           const AdaptedField& F) const;

private:
    struct Adjoint {
        AdaptedField r;
        AdaptedField R;
    };
    Adjoint adjoint(const AdaptedField& y) const;
    ControlSet gradient_from(const ControlSet& c, const Adjoint& adj) const;
    double terminal_norm_sq(const AdaptedField& y) const;

    const SpdeModel& model_;
    PenalizationConfig cfg_;
    BetaProfile beta_;
    WeightSet ws_;
    WeightSet ws_eps_;
    bool has_H_;
    std::vector<double> slot_w_;  // probability dt h on control slots, else 0
    std::vector<double> Dh_;      // per (slot, i); 0 off G0 or off control slots
    std::vector<double> DH_;
    std::vector<double> W_;  // state weight per (slot, i); 0 outside k = 1..N-1
};

// Backward problem: y_T, F given; control h on G0. State penalty uses
// theta-tilde_eps over k = 1..N-1, control penalty the backward weights over
// k = 1..N, plus (1/2eps) E||y(0)||^2. Gradient via the pathwise forward
// adjoint with source theta-tilde_eps^{-2} y and initial y(0)/eps.
class BackwardHum {
public:
    BackwardHum(const SpdeModel& model, const WeightParams& params, PenalizationConfig cfg);

    const SpdeModel& model() const noexcept { return model_; }
    const PenalizationConfig& config() const noexcept { return cfg_; }
    const WeightSet& weights() const noexcept { return ws_; }
    const WeightSet& weights_eps() const noexcept { return ws_eps_; }

    ControlSet zero_controls() const;
    double inner(const ControlSet& a, const ControlSet& b) const;
    double penalty_inner(const ControlSet& a, const ControlSet& b) const;

    BsdeSolution state(const ControlSet& c, const BackwardData& data) const;
    CostTerms eval_J(const ControlSet& c, const BackwardData& data) const;
    ControlSet grad_J(const ControlSet& c, const BackwardData& data) const;

    HumSolution solve(const BackwardData& data, const ControlSet* warm_start = nullptr) const;
    DualityReport duality(const HumSolution& s, const BackwardData& data) const;
    CostReport cost_report(const HumSolution& s, const BackwardData& data) const;

private:
    AdaptedField adjoint(const AdaptedField& y) const;
    ControlSet gradient_from(const ControlSet& c, const AdaptedField& q) const;

    const SpdeModel& model_;
    PenalizationConfig cfg_;
    BetaProfile beta_;
    WeightSet ws_;
    WeightSet ws_eps_;
    std::vector<double> slot_w_;
    std::vector<double> Dh_;
    std::vector<double> W_;  // k = 1..N-1
};

// Free-function entry points.
CostTerms eval_J_forward(const ForwardHum& hum, const ControlSet& c, const ComplexField& y0,
                         const AdaptedField& F);
ControlSet grad_J_forward(const ForwardHum& hum, const ControlSet& c, const ComplexField& y0,
                          const AdaptedField& F);
HumSolution solve_penalized_forward(const ForwardHum& hum, const ComplexField& y0,
                                    const AdaptedField& F);
HumSolution solve_penalized_backward(const BackwardHum& hum, const BackwardData& data);

// Linear part of the backward data only (Upsilon is ignored by the HUM layer).
BackwardData linear_backward_data(const BackwardData& data);

}  // namespace sgl
