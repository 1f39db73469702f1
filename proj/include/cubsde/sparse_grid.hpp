#pragma once

#include "cubsde/cubature_formula.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cubsde {

/// Axis-aligned box prod_i [lower_i, upper_i]. A dimension with
/// lower_i == upper_i is collapsed: it carries a single level-0 node.
struct Hypercube {
    std::vector<double> lower;
    std::vector<double> upper;

    int dim() const { return static_cast<int>(lower.size()); }
    double edge(int i) const { return upper[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)]; }
    bool collapsed(int i) const { return edge(i) == 0.0; }
    bool contains(const Vector& x) const;

    friend bool operator==(const Hypercube&, const Hypercube&) = default;
};

/// Smallest box containing every point. Throws InvalidArgument on an empty set.
Hypercube minimal_hypercube(std::span<const Vector> points);

/// Hierarchical level/position pair (l, j) of a sparse-grid node.
struct LevelIndex {
    std::vector<int> level;
    std::vector<int> position;

    int level_sum() const;
    /// Ordered by (sum of levels, levels, positions).
    friend std::strong_ordering operator<=>(const LevelIndex& a, const LevelIndex& b);
    friend bool operator==(const LevelIndex&, const LevelIndex&) = default;
};

/// Node count of I_p in d dimensions, from the closed-form multi-level sum.
std::uint64_t count_nodes(int p, int d);

/// Same count restricted to multi-levels with all entries strictly positive.
std::uint64_t count_interior_level_nodes(int p, int d);

/// Node structure of the order-p sparse grid on a hypercube. Nodes are stored
/// block-wise by level vector; the flat node order is (sum l, l, j).
class SparseGridLayout {
public:
    SparseGridLayout(Hypercube cube, int order);

    const Hypercube& cube() const { return cube_; }
    int order() const { return order_; }
    int dim() const { return cube_.dim(); }
    std::size_t size() const { return total_; }

    LevelIndex level_index(std::size_t node) const;
    Vector coordinates(std::size_t node) const;
    std::vector<Vector> all_coordinates() const;
    /// Flat index of (l, j), which must be canonical (j odd or l = 0).
    std::size_t index_of(const LevelIndex& li) const;

    /// Turns nodal values into hierarchical surpluses in place, one dimension
    /// at a time. `values` holds `width` interleaved channels per node.
    void hierarchize(std::span<double> values, std::size_t width = 1) const;

    /// Sum of surplus * basis at x for each of `width` interleaved channels,
    /// written to `out`. Coordinates outside the cube are clamped silently;
    /// use clamp() first to enforce the domain.
    void evaluate(std::span<const double> surpluses, std::size_t width, std::span<const double> x,
                  std::span<double> out) const;
    double evaluate(std::span<const double> surpluses, const Vector& x) const;

    /// Clamps x onto the cube when it lies within 1e-9 edge lengths of it;
    /// throws OutsideDomain otherwise.
    Vector clamp(const Vector& x) const;
    void clamp(std::span<const double> x, std::span<double> y) const;

    /// Node coordinates, node-major (size() * dim() values).
    std::vector<double> coordinate_array() const;

private:
    struct Block {
        std::vector<int> level;
        std::vector<std::size_t> counts;  // nodes per dimension
        std::vector<std::size_t> strides;
        std::vector<int> boundary_dims;   // non-collapsed dimensions at level 0
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    std::uint64_t level_key(std::span<const int> level) const;
    std::size_t block_local_index(const Block& b, std::span<const int> position) const;
    void block_positions(const Block& b, std::size_t local, std::vector<int>& position) const;

    Hypercube cube_;
    int order_ = 0;
    std::vector<Block> blocks_;
    std::unordered_map<std::uint64_t, std::size_t> block_of_level_;
    std::size_t total_ = 0;
};

/// Nodes of I_p on the cube with their coordinates, in layout order.
std::vector<std::pair<LevelIndex, Vector>> enumerate_nodes(const Hypercube& cube, int p);

/// Piecewise-multilinear interpolant in the order-p sparse hierarchical basis.
class SparseInterpolant {
public:
    using Source = std::function<double(const Vector&)>;

    SparseInterpolant(std::shared_ptr<const SparseGridLayout> layout, std::vector<double> surpluses);

    /// Samples `source` at every node and hierarchizes.
    static SparseInterpolant hierarchize(const Hypercube& cube, int p, const Source& source);
    /// Builds from nodal values given in layout order.
    static SparseInterpolant from_nodal_values(std::shared_ptr<const SparseGridLayout> layout,
                                               std::vector<double> values);

    double eval(const Vector& x) const;
    double operator()(const Vector& x) const { return eval(x); }

    const SparseGridLayout& layout() const { return *layout_; }
    const Hypercube& cube() const { return layout_->cube(); }
    int order() const { return layout_->order(); }
    const std::vector<double>& surpluses() const { return surpluses_; }
    double surplus(const LevelIndex& li) const { return surpluses_[layout_->index_of(li)]; }

private:
    std::shared_ptr<const SparseGridLayout> layout_;
    std::vector<double> surpluses_;
};

/// Surplus of a single node by the dimension recursion
///   theta(psi) = theta_-(psi(., x_l)) - 1/2 theta_-(psi(., x_{j-1})) - 1/2 theta_-(psi(., x_{j+1}))
/// evaluated directly against the source. Reference for cross-checking.
double surplus_by_recursion(const Hypercube& cube, const LevelIndex& li,
                            const SparseInterpolant::Source& source);

}  // namespace cubsde
