#pragma once

#include "cubsde/cubature_formula.hpp"
#include "cubsde/problem.hpp"
#include "cubsde/time_grid.hpp"

#include <functional>
#include <vector>

namespace cubsde {

/// Classical RK4 substeps per linear path segment.
inline constexpr int kDefaultSubsteps = 4;

/// Ito-to-Stratonovich drift b_i - 1/2 sum_{j,k} sigma_{kj} d_k sigma_{ij}.
Vector stratonovich_drift(const Problem& problem, double t, const Vector& x);

/// Central-difference Jacobian of the diffusion, step cbrt(eps) (1 + |x_k|).
std::vector<Matrix> diffusion_jacobian_fd(const Problem& problem, double t, const Vector& x);

/// Solves dX = b_bar dt + sigma d omega from t0 to t1 along `path`, which
/// must live on [0, t1 - t0]. Throws IntegrationFailure on a non-finite state.
Vector ode_step(const Problem& problem, double t0, double t1, const Vector& x,
                const PiecewiseLinearPath& path, int substeps = kDefaultSubsteps);

/// One-step image of a point under the cubature measure.
struct ChildSet {
    std::vector<Vector> states;
    std::vector<double> weights;
    /// omega(t_{i+1}) - omega(t_i) for each path.
    std::vector<Vector> increments;

    std::size_t size() const { return states.size(); }
};

/// Children using a formula already scaled to [0, h].
ChildSet children(const Problem& problem, double t0, const CubatureFormula& scaled_formula,
                  const Vector& x, int substeps = kDefaultSubsteps);

/// Children of x over step i of the grid.
ChildSet children(const Problem& problem, const TimeGrid& grid, int i, const Vector& x,
                  const CubatureFormula& formula, int substeps = kDefaultSubsteps);

struct ForwardOptions {
    int substeps = kDefaultSubsteps;
    /// Atoms whose states agree to this absolute tolerance are merged. Merging
    /// only coalesces coincident tree nodes, so the measure is unchanged.
    double merge_tolerance = 1e-10;
    std::size_t atom_budget = std::size_t{1} << 22;
};

/// E^Q[phi(X_T)] under the n-step cubature measure started at problem.x0.
double forward_expectation(const Problem& problem, const TimeGrid& grid,
                           const CubatureFormula& formula,
                           const std::function<double(const Vector&)>& phi,
                           const ForwardOptions& options = {});

}  // namespace cubsde
