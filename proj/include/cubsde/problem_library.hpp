#pragma once

#include "cubsde/problem.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cubsde {

/// Regularity regime of the terminal data, which selects m* and the grid exponent.
enum class Regime { Smooth, Lipschitz };

const char* to_string(Regime regime);

struct NamedProblem {
    std::string name;
    Problem problem;
    std::optional<double> exact_u0;
    Regime regime = Regime::Smooth;
    std::string notes;
};

/// X = W in R^d, x0 = 0, T = 1 by default,
///   f(y, z) = (y - (2 + d) / (2d)) sum_l z_l,   g(x) = k / (1 + k),  k = exp(T + sum_l x_l).
/// u(t, x) = k(t, x) / (1 + k(t, x)) with k(t, x) = exp(t + sum_l x_l) solves the
/// associated semilinear PDE, so Y_0 = 1/2 for every horizon.
NamedProblem paper_benchmark(int d, double horizon = 1.0);

/// X = W in R^d, f = 0, g(x) = exp(-|x|^2 / 2). Reference value from tensor
/// Gauss-Hermite quadrature (closed form (1 + T)^{-d/2}).
NamedProblem linear_smooth(int d, double horizon = 1.0);

/// X = W, f = 0, g = c. u0 = c.
NamedProblem constant_terminal(int d, double c = 1.0, double horizon = 1.0);

/// X = W, f = 0, g(x) = |x_1 - K|: Lipschitz, not differentiable at the strike.
/// E|x0_1 + W_T - K| has a Bachelier-type closed form.
NamedProblem lipschitz_call(int d, double strike = 0.25, double horizon = 1.0);

/// Scalar geometric Brownian motion dX = mu X dt + s X dW with a discounting
/// generator f(y) = -rho y and g(x) = x. u0 = x0 exp((mu - rho) T). Exercises the
/// Stratonovich correction and a y-dependent generator.
NamedProblem gbm_discounted(int d = 1, double horizon = 1.0);

struct ProblemEntry {
    std::string name;
    std::string summary;
    std::function<NamedProblem(int d, double horizon)> make;
};

const std::vector<ProblemEntry>& problem_registry();

/// Throws InvalidArgument for unknown names.
NamedProblem make_problem(const std::string& name, int d, double horizon = 1.0);

}  // namespace cubsde
