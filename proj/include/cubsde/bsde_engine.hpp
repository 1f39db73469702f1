#pragma once

#include "cubsde/cubature_formula.hpp"
#include "cubsde/forward_flow.hpp"
#include "cubsde/problem.hpp"
#include "cubsde/sparse_grid.hpp"
#include "cubsde/time_grid.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cubsde {

struct SolverConfig {
    /// Exponent in the sparse-order rule; (m + 1) / 2 = 2 for smooth data and m = 3.
    double m_star = 2.0;
    /// Upper bound on the sparse order of any layer.
    int p_max = 14;
    /// When set, every layer uses this order instead of the rule.
    std::optional<int> fixed_order;
    int substeps = kDefaultSubsteps;
    double fixed_point_tolerance = 1e-12;
    int fixed_point_max_iterations = 50;
    /// Worker threads for per-node work inside a layer.
    int threads = 1;
    /// Maximum number of tree nodes tree_solve may visit.
    std::size_t tree_budget = std::size_t{1} << 26;
};

/// m* for smooth terminal data: (m + 1) / 2.
double m_star_smooth(int m);
/// m* for Lipschitz terminal data on a gamma-grid: max(d + (m - 1 - gamma) / (2 gamma), (m + 1) / 2).
double m_star_lipschitz(int m, int d, double gamma);

/// Smallest integer a > d - 1 with 2a - (d - 1) log2(a - d + 1) > -m* log2(h).
int sparse_order_rule(double m_star, double h, int d);

struct FixedPointResult {
    double value = 0.0;
    int iterations = 0;
};

/// Fixed point of y -> e_part + h f(t, x, y, z) by successive substitution
/// from y = e_part. `iterations` counts substitutions before the one that
/// confirmed convergence. Throws ConvergenceFailure after max_iterations.
FixedPointResult implicit_step(double e_part, const Vector& z, const Vector& x, double t, double h,
                               const Problem::GeneratorFn& f, double tolerance = 1e-12,
                               int max_iterations = 50);

struct TreeResult {
    double u0 = 0.0;
    Vector v0;
    std::size_t nodes_visited = 0;
};

/// Backward recursion over the complete cubature tree (kappa^n leaves).
TreeResult tree_solve(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula,
                      const SolverConfig& config = {});

/// Point set D_i of one backward layer. Children are recomputed on demand
/// rather than stored.
struct LayerGrid {
    int step = 0;
    int order = 0;
    /// The rule asked for more than p_max.
    bool capped = false;
    int requested_order = 0;
    std::shared_ptr<const SparseGridLayout> layout;

    const Hypercube& cube() const { return layout->cube(); }
    std::size_t size() const { return layout->size(); }
    std::vector<Vector> nodes() const { return layout->all_coordinates(); }
};

/// Forward sweep: D_0 = {x0}; D_i = sparse nodes of order p_i on the minimal
/// hypercube of the children of D_{i-1}, for i = 1 .. n-1.
std::vector<LayerGrid> build_layers(const Problem& problem, const TimeGrid& grid,
                                    const CubatureFormula& formula, const SolverConfig& config = {});

struct LayerDiagnostics {
    int step = 0;
    double h = 0.0;
    int order = 0;
    int requested_order = 0;
    bool capped = false;
    std::size_t nodes = 0;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct SolveReport {
    double u0 = 0.0;
    Vector v0;
    std::vector<LayerDiagnostics> layers;
    /// 1 (for D_0 = {x0}) plus the sizes of D_1 .. D_{n-1}.
    std::size_t total_nodes = 0;
    double wall_seconds = 0.0;
    std::size_t fixed_point_calls = 0;
    std::size_t fixed_point_iterations = 0;
    int fixed_point_max_iterations_seen = 0;
    int cap_hits = 0;
    /// Non-fatal conditions: order caps and an undeclared Lipschitz bound of f.
    std::vector<std::string> warnings;
    // configuration echo
    int n = 0;
    double gamma = 1.0;
    bool refined_grid = false;
    int p_max = 0;
    double m_star = 0.0;
    std::optional<int> fixed_order;
};

/// Backward sweep of the sparse-grid projected scheme.
SolveReport sparse_solve(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula,
                         const SolverConfig& config = {});

struct ExtrapolatedReport {
    /// 2 u0(refined 2n grid) - u0(n grid).
    double u0 = 0.0;
    SolveReport coarse;
    SolveReport fine;
    std::size_t total_nodes = 0;
    double wall_seconds = 0.0;
};

/// Richardson-Romberg combination of sparse_solve on the gamma-grid with n
/// steps and on its midpoint refinement.
ExtrapolatedReport extrapolated_solve(const Problem& problem, int n, double gamma,
                                      const CubatureFormula& formula, const SolverConfig& config = {});

}  // namespace cubsde
