#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgl/spde_solvers.hpp"
#include "sgl/weights.hpp"

namespace sgl {

struct CarlemanReport {
    std::vector<std::pair<std::string, double>> lhs;
    std::vector<std::pair<std::string, double>> rhs;
    double lhs_total = 0.0;
    double rhs_total = 0.0;
    double ratio = 0.0;  // 0 when both sides vanish
    WeightParams params;
    std::string sample;
    double term(const std::string& name) const;
};

// Backward stochastic estimate for (z, Z) driven by Xi; forward weights.
// Time ranges: k = 0..N-1 (the weight vanishes at the singular node anyway).
CarlemanReport evaluate_backward_estimate(const AdaptedField& z, const AdaptedField& Z,
                                          const AdaptedField& Xi, const WeightSet& ws,
                                          std::span<const char> g0_mask);

// Deterministic forward estimate; q[k] and varpi[k] for k = 0..N, backward weights.
CarlemanReport evaluate_deterministic_estimate(std::span<const ComplexField> q,
                                               std::span<const ComplexField> varpi,
                                               const WeightSet& ws,
                                               std::span<const char> g0_mask);

// Expectation version over the tree.
CarlemanReport evaluate_random_estimate(const AdaptedField& q, const AdaptedField& varpi,
                                        const WeightSet& ws, std::span<const char> g0_mask);

enum class EstimateKind { backward_stochastic, deterministic, random };
EstimateKind parse_estimate_kind(const std::string& name);  // throws ConfigError
std::string to_string(EstimateKind kind);

// Seeded sample generator: data and sources depend on (seed, rep) only, the
// weights on the params passed in.
class CarlemanSampler {
public:
    CarlemanSampler(const SpdeModel& model, EstimateKind kind, std::uint64_t seed);
    CarlemanReport operator()(const WeightParams& params, int rep) const;

private:
    const SpdeModel& model_;
    EstimateKind kind_;
    std::uint64_t seed_;
};

struct SweepCell {
    double lambda = 0.0;
    double mu = 0.0;
    int m = 1;
    int n_samples = 0;
    double ratio_median = 0.0;
    double ratio_max = 0.0;
    bool flagged = false;
};

using SampleGenerator = std::function<CarlemanReport(const WeightParams&, int)>;

// Rows ordered mu-major, lambda-minor. A cell is flagged when its max ratio
// exceeds twice the max ratio of the previous lambda while lambda at least doubled.
std::vector<SweepCell> sweep_parameters(const SampleGenerator& gen, const WeightParams& base,
                                        const std::vector<double>& lambdas,
                                        const std::vector<double>& mus, int repetitions);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells);

}  // namespace sgl
