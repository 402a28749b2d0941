#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgl/discretization.hpp"

namespace sgl {

// Complete binary tree of depth n_b discretizing B(t) on [0, T]. Nodes are in
// level order: node 0 is the root, children of p are 2p+1 (increment
// +sqrt(dtau)) and 2p+2 (increment -sqrt(dtau)).
class ScenarioTree {
public:
    ScenarioTree(int depth, double horizon);

    int depth() const noexcept { return depth_; }
    double dtau() const noexcept { return dtau_; }
    double horizon() const noexcept { return T_; }
    int node_count() const noexcept { return (2 << depth_) - 1; }
    int leaf_count() const noexcept { return 1 << depth_; }
    int first_at_level(int level) const noexcept { return (1 << level) - 1; }
    int level(int node) const noexcept;
    bool is_leaf(int node) const noexcept { return level(node) == depth_; }
    int parent(int node) const noexcept { return (node - 1) / 2; }
    int child(int node, int which) const noexcept { return 2 * node + 1 + which; }
    double probability(int node) const noexcept;
    // +sqrt(dtau) for first children, -sqrt(dtau) for second; 0 at the root.
    double increment(int node) const noexcept;
    // Root-to-node chain, root first.
    std::vector<int> path(int node) const;
    // Cumulative increment sum B at the node.
    double brownian_value(int node) const;

private:
    int depth_;
    double T_;
    double dtau_;
};

ScenarioTree build_tree(int n_b, double horizon);

// Probability-weighted mean of the two child values. Throws on leaves.
Complex conditional_expectation(const ScenarioTree& tree, int node,
                                std::span<const Complex> child_values);
// (v+ - v-)/(2 sqrt(dtau)): the Y with v_c = CE + Y dB_c on both branches.
Complex martingale_increment(const ScenarioTree& tree, int node,
                             std::span<const Complex> child_values);
// Fixed-order probability-weighted sum over leaves (leaf_values in leaf order).
Complex expectation_over_leaves(const ScenarioTree& tree, std::span<const Complex> leaf_values);

// Binds a tree to a time grid. Node at level l < n_b owns time indices
// [l s, (l+1) s) with s = n_steps / n_b; leaves own {n_steps}. A depth-0
// tree owns every index at its single node.
class TreeLayout {
public:
    TreeLayout(ScenarioTree tree, TimeGrid tgrid, int n_space);

    const ScenarioTree& tree() const noexcept { return tree_; }
    const TimeGrid& time_grid() const noexcept { return tgrid_; }
    int n_space() const noexcept { return n_space_; }
    int steps_per_noise() const noexcept { return spn_; }
    int first_index(int node) const noexcept;
    int index_count(int node) const noexcept;
    bool owns(int node, int k) const noexcept {
        return k >= first_index(node) && k < first_index(node) + index_count(node);
    }
    // Ancestor of `leaf` (or the leaf itself) owning time index k.
    int owner_on_path(int leaf, int k) const;
    // Total (node, time index) slots.
    std::size_t slot_count() const noexcept { return offsets_.back(); }
    std::size_t slot(int node, int k) const;
    // Step k -> k+1 crosses a noise boundary.
    bool is_boundary_step(int k) const noexcept;

    bool operator==(const TreeLayout& o) const noexcept {
        return tree_.depth() == o.tree_.depth() && tgrid_ == o.tgrid_ && n_space_ == o.n_space_;
    }

private:
    ScenarioTree tree_;
    TimeGrid tgrid_;
    int n_space_;
    int spn_;
    std::vector<std::size_t> offsets_;
};

// One ComplexField per (tree node, owned time index). Adaptedness is
// structural: a node only stores values for its own time indices.
class AdaptedField {
public:
    AdaptedField() = default;
    explicit AdaptedField(std::shared_ptr<const TreeLayout> layout);

    const TreeLayout& layout() const { return *layout_; }
    const std::shared_ptr<const TreeLayout>& layout_ptr() const noexcept { return layout_; }
    bool empty() const noexcept { return !layout_; }

    std::span<Complex> at(int node, int k);
    std::span<const Complex> at(int node, int k) const;
    std::span<const Complex> on_path(int leaf, int k) const;

    std::vector<Complex>& raw() noexcept { return data_; }
    const std::vector<Complex>& raw() const noexcept { return data_; }

    void set_zero();
    AdaptedField& operator+=(const AdaptedField& o);
    AdaptedField& operator-=(const AdaptedField& o);
    AdaptedField& operator*=(Complex c);
    // this += c * o
    void axpy(Complex c, const AdaptedField& o);
    bool all_finite() const noexcept;

private:
    void check_same(const AdaptedField& o) const;

    std::shared_ptr<const TreeLayout> layout_;
    std::vector<Complex> data_;
};

// E ||f(t_k)||^2_{L2(G)} over the nodes owning index k.
double expected_l2_sq_at(const AdaptedField& f, int k, const SpatialGrid& grid);

// Per-leaf CSV rows (leaf, t, x, re, im) along each leaf path.
void write_adapted_csv(const AdaptedField& f, const SpatialGrid& grid, const std::string& path);

}  // namespace sgl
