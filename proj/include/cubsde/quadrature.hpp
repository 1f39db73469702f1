#pragma once

#include "cubsde/cubature_formula.hpp"

#include <functional>
#include <vector>

namespace cubsde {

struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule: sum w_k phi(x_k) ~ E[phi(xi)], xi ~ N(0, 1).
/// Nodes come from the symmetric Jacobi matrix (Golub-Welsch).
GaussHermiteRule gauss_hermite(int points);

/// Tensor-product rule for E[phi(mean + sqrt(variance) xi)], xi ~ N(0, I_d).
double gaussian_expectation(const std::function<double(const Vector&)>& phi, const Vector& mean,
                            double variance, int points_per_axis);

}  // namespace cubsde
