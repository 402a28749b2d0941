#include "sgl/scenario_tree.hpp"

#include <bit>
#include <cmath>

#include "sgl/errors.hpp"
#include "sgl/io.hpp"

namespace sgl {

ScenarioTree::ScenarioTree(int depth, double horizon) : depth_(depth), T_(horizon) {
    if (depth < 0) throw ConfigError("scenario tree: depth must be >= 0");
    if (depth > 24) throw ConfigError("scenario tree: depth too large");
    if (!(horizon > 0)) throw ConfigError("scenario tree: horizon must be positive");
    dtau_ = depth > 0 ? horizon / depth : horizon;
}

int ScenarioTree::level(int node) const noexcept {
    return static_cast<int>(std::bit_width(static_cast<unsigned>(node + 1))) - 1;
}

double ScenarioTree::probability(int node) const noexcept {
    return std::ldexp(1.0, -level(node));
}

double ScenarioTree::increment(int node) const noexcept {
    if (node == 0) return 0.0;
    const double s = std::sqrt(dtau_);
    return (node % 2 == 1) ? s : -s;
}

std::vector<int> ScenarioTree::path(int node) const {
    std::vector<int> p(level(node) + 1);
    for (int l = level(node); l >= 0; --l) {
        p[l] = node;
        node = parent(node);
    }
    return p;
}

double ScenarioTree::brownian_value(int node) const {
    double b = 0.0;
    for (int n : path(node)) b += increment(n);
    return b;
}

ScenarioTree build_tree(int n_b, double horizon) { return ScenarioTree(n_b, horizon); }

namespace {

void require_children(const ScenarioTree& tree, int node, std::span<const Complex> v) {
    if (node < 0 || node >= tree.node_count()) throw DimensionError("node out of range");
    if (tree.is_leaf(node)) throw DimensionError("leaf node has no children");
    if (v.size() != 2) throw DimensionError("binary tree: expected two child values");
}

}  // namespace

Complex conditional_expectation(const ScenarioTree& tree, int node,
                                std::span<const Complex> child_values) {
    require_children(tree, node, child_values);
    return 0.5 * (child_values[0] + child_values[1]);
}

Complex martingale_increment(const ScenarioTree& tree, int node,
                             std::span<const Complex> child_values) {
    require_children(tree, node, child_values);
    return (child_values[0] - child_values[1]) / (2.0 * std::sqrt(tree.dtau()));
}

Complex expectation_over_leaves(const ScenarioTree& tree, std::span<const Complex> leaf_values) {
    if (static_cast<int>(leaf_values.size()) != tree.leaf_count())
        throw DimensionError("expectation: one value per leaf required");
    Complex s{};
    const double p = std::ldexp(1.0, -tree.depth());
    for (const auto& v : leaf_values) s += v;
    return p * s;
}

// ------------------------------------------------------------------ layout

TreeLayout::TreeLayout(ScenarioTree tree, TimeGrid tgrid, int n_space)
    : tree_(tree), tgrid_(tgrid), n_space_(n_space) {
    const int d = tree.depth();
    if (std::abs(tree.horizon() - tgrid.horizon()) > 1e-14 * tgrid.horizon())
        throw ConfigError("tree horizon differs from time grid horizon");
    if (d > 0 && tgrid.steps() % d != 0)
        throw ConfigError("n_b must divide n_steps (integer PDE steps per noise step)");
    spn_ = d > 0 ? tgrid.steps() / d : tgrid.steps();
    offsets_.resize(tree.node_count() + 1);
    offsets_[0] = 0;
    for (int node = 0; node < tree.node_count(); ++node)
        offsets_[node + 1] = offsets_[node] + index_count(node);
}

int TreeLayout::first_index(int node) const noexcept {
    if (tree_.depth() == 0) return 0;
    return tree_.level(node) * spn_;
}

int TreeLayout::index_count(int node) const noexcept {
    if (tree_.depth() == 0) return tgrid_.steps() + 1;
    return tree_.is_leaf(node) ? 1 : spn_;
}

int TreeLayout::owner_on_path(int leaf, int k) const {
    const int d = tree_.depth();
    if (k < 0 || k > tgrid_.steps()) throw DimensionError("time index out of range");
    if (d == 0) return 0;
    const int lvl = k == tgrid_.steps() ? d : k / spn_;
    return ((leaf + 1) >> (tree_.level(leaf) - lvl)) - 1;
}

std::size_t TreeLayout::slot(int node, int k) const {
    if (node < 0 || node >= tree_.node_count() || !owns(node, k))
        throw DimensionError("adapted field: node does not own time index");
    return offsets_[node] + static_cast<std::size_t>(k - first_index(node));
}

bool TreeLayout::is_boundary_step(int k) const noexcept {
    return tree_.depth() > 0 && (k + 1) % spn_ == 0;
}

// ------------------------------------------------------------ adapted field

AdaptedField::AdaptedField(std::shared_ptr<const TreeLayout> layout)
    : layout_(std::move(layout)), data_(layout_->slot_count() * layout_->n_space()) {}

std::span<Complex> AdaptedField::at(int node, int k) {
    const std::size_t n = layout_->n_space();
    return {data_.data() + layout_->slot(node, k) * n, n};
}

std::span<const Complex> AdaptedField::at(int node, int k) const {
    const std::size_t n = layout_->n_space();
    return {data_.data() + layout_->slot(node, k) * n, n};
}

std::span<const Complex> AdaptedField::on_path(int leaf, int k) const {
    return at(layout_->owner_on_path(leaf, k), k);
}

void AdaptedField::set_zero() { std::fill(data_.begin(), data_.end(), Complex{}); }

void AdaptedField::check_same(const AdaptedField& o) const {
    if (!layout_ || !o.layout_ || !(*layout_ == *o.layout_))
        throw DimensionError("adapted fields live on different layouts");
}

AdaptedField& AdaptedField::operator+=(const AdaptedField& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

AdaptedField& AdaptedField::operator-=(const AdaptedField& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

AdaptedField& AdaptedField::operator*=(Complex c) {
    for (auto& v : data_) v *= c;
    return *this;
}

void AdaptedField::axpy(Complex c, const AdaptedField& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += c * o.data_[i];
}

bool AdaptedField::all_finite() const noexcept { return sgl::all_finite(data_); }

double expected_l2_sq_at(const AdaptedField& f, int k, const SpatialGrid& grid) {
    const auto& lay = f.layout();
    const auto& tree = lay.tree();
    double s = 0.0;
    for (int node = 0; node < tree.node_count(); ++node) {
        if (!lay.owns(node, k)) continue;
        s += tree.probability(node) * l2_norm_sq(f.at(node, k), grid);
    }
    return s;
}

void write_adapted_csv(const AdaptedField& f, const SpatialGrid& grid, const std::string& path) {
    CsvWriter csv(path, {"leaf", "t", "x", "re", "im"});
    const auto& lay = f.layout();
    const auto& tree = lay.tree();
    const int first_leaf = tree.first_at_level(tree.depth());
    for (int j = 0; j < tree.leaf_count(); ++j) {
        const int leaf = first_leaf + j;
        for (int k = 0; k <= lay.time_grid().steps(); ++k) {
            auto v = f.on_path(leaf, k);
            for (int i = 0; i < grid.size(); ++i)
                csv.row({static_cast<double>(j), lay.time_grid().t(k), grid.x(i), v[i].real(),
                         v[i].imag()});
        }
    }
}

}  // namespace sgl
