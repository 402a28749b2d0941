#pragma once

#include <span>
#include <vector>

#include "sgl/scenario_tree.hpp"
#include "sgl/weights.hpp"

namespace sgl {

// Time indices k_first..k_last (inclusive). with_dt = false evaluates a
// single-time term (no dt factor), e.g. |z(0)|^2.
struct TimeRange {
    int k_first;
    int k_last;
    bool with_dt = true;
};

// Space-time quadrature
//   E sum_{k in range} [dt] h sum_{i in mask} exp(log w(k,i)) |f(k,i)|^2
// with log w from ws.log_weight. The log weight and log|f|^2 are added before
// exponentiation; a sum above kLogOverflow (or an infinite weight against a
// nonzero value) raises SaturationError. Zero weights (-inf) contribute 0.
// An empty mask means every node.
double weighted_seminorm(const AdaptedField& f, const WeightSet& ws, const WeightPowers& p,
                         TimeRange range, std::span<const char> mask = {});

// Deterministic path version: path[k] is the field at time index k.
double weighted_seminorm(std::span<const ComplexField> path, const WeightSet& ws,
                         const WeightPowers& p, TimeRange range, std::span<const char> mask = {});

// exp(log w(k,i)) for k in [k_first, k_last]; SaturationError on overflow.
// Singular nodes with an infinite weight are stored as +inf only when
// allow_infinite is set.
class WeightTable {
public:
    WeightTable() = default;
    WeightTable(const WeightSet& ws, const WeightPowers& p, int k_first, int k_last,
                bool allow_infinite = false);

    double operator()(int k, int i) const { return w_[idx(k, i)]; }
    int k_first() const noexcept { return k0_; }
    int k_last() const noexcept { return k1_; }
    bool contains(int k) const noexcept { return k >= k0_ && k <= k1_; }

private:
    std::size_t idx(int k, int i) const { return static_cast<std::size_t>(k - k0_) * n_ + i; }
    int k0_ = 0;
    int k1_ = -1;
    int n_ = 0;
    std::vector<double> w_;
};

}  // namespace sgl
