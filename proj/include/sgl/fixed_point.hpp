#pragma once

#include <cstdint>
#include <vector>

#include "sgl/hum.hpp"
#include "sgl/nonlinearity.hpp"

namespace sgl {

// sqrt E sum_k dt h theta^{-2} lambda^{-3} mu^{-4} xi^{-3} |F|^2; forward weights
// over k = 0..N-1.
double source_norm_S(const AdaptedField& F, const WeightSet& ws);
// Same powers with backward weights over k = 1..N.
double source_norm_Q(const AdaptedField& F, const WeightSet& ws);

struct PicardConfig {
    double fp_tol = 1e-6;
    int max_iters = 50;
    void validate() const;  // throws ConfigError
};

struct PicardTrace {
    std::vector<double> increments;  // ||F_{k+1} - F_k||
    std::vector<double> factors;     // increments[k] / increments[k-1]
    std::vector<double> source_norms;
    AdaptedField final_source;  // the source that produced the returned solution
    int iterations = 0;
    bool converged = false;
};

struct PicardResult {
    HumSolution solution;
    PicardTrace trace;
};

// F_0 = 0; F_{k+1} = f(y(F_k)) nodewise until
// ||F_{k+1} - F_k||_S < fp_tol (1 + ||F_{k+1}||_S).
PicardResult picard_forward(const ForwardHum& hum, const ComplexField& y0,
                            const NonlinearitySpec& nl, const PicardConfig& cfg);

// F_{k+1} = Upsilon(y(F_k), Y(F_k)) with the Q norm. data.F and data.nl are ignored.
PicardResult picard_backward(const BackwardHum& hum, const BackwardData& data,
                             const NonlinearitySpec& nl, const PicardConfig& cfg);

enum class ProblemKind { forward, backward };

struct ProbeRow {
    double lambda = 0.0;
    double factor = 0.0;  // ||E F1 - E F2|| / ||F1 - F2||
    double bound = 0.0;   // Lipschitz composition bound from the state differences
};

// One map application for two sources F and F + delta per lambda.
// `data` is y0 (forward) or a deterministic y_T (backward).
std::vector<ProbeRow> contraction_probe(ProblemKind kind, const SpdeModel& model,
                                        const NonlinearitySpec& nl, const WeightParams& base,
                                        const std::vector<double>& lambdas,
                                        const PenalizationConfig& cfg, const ComplexField& data,
                                        std::uint64_t seed);

}  // namespace sgl
