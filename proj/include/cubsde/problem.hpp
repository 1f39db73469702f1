#pragma once

#include "cubsde/cubature_formula.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cubsde {

/// Markovian forward-backward system
///   dX = b(t,X) dt + sigma(t,X) dW,              X_0 = x0
///   dY = -f(t,X,Y,Z) dt + Z dW,                  Y_T = g(X_T)
/// with X in R^d and W in R^r. Z has the Brownian dimension r.
struct Problem {
    using DriftFn = std::function<Vector(double t, const Vector& x)>;
    using DiffusionFn = std::function<Matrix(double t, const Vector& x)>;
    /// Element k is the d x r matrix d sigma / d x_k.
    using JacobianFn = std::function<std::vector<Matrix>(double t, const Vector& x)>;
    using GeneratorFn = std::function<double(double t, const Vector& x, double y, const Vector& z)>;
    using TerminalFn = std::function<double(const Vector& x)>;
    using SolutionFn = std::function<double(double t, const Vector& x)>;

    int state_dim = 1;
    int brownian_dim = 1;
    DriftFn drift;
    DiffusionFn diffusion;
    /// Optional; central differences are used when empty.
    JacobianFn diffusion_jacobian;
    /// Optional; an empty generator means f == 0.
    GeneratorFn generator;
    TerminalFn terminal;
    Vector x0;
    double horizon = 1.0;
    /// Declared Lipschitz bound of f in y, used to guard the implicit step.
    std::optional<double> generator_lipschitz_y;
    /// Optional closed form u(t, x) = Y_t^{t,x}.
    SolutionFn exact_solution;
    /// Declares that b and sigma depend on neither t nor x. The path ODE then
    /// has the closed-form solution x + b h + sigma (omega(h) - omega(0)).
    bool constant_coefficients = false;

    bool has_generator() const { return static_cast<bool>(generator); }

    /// Throws InvalidArgument when a mandatory member is missing or shapes disagree.
    void check() const;
};

/// X = x0 + W: zero drift, identity diffusion, zero Jacobian. Generator and
/// terminal are left for the caller.
Problem brownian_problem(int dim, double horizon = 1.0);

}  // namespace cubsde
