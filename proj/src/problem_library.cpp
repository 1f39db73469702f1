#include "cubsde/problem_library.hpp"

#include "cubsde/errors.hpp"
#include "cubsde/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace cubsde {

GaussHermiteRule gauss_hermite(int points) {
    if (points < 1) throw InvalidArgument("gauss_hermite: need at least one point");
    Matrix jacobi = Matrix::Zero(points, points);
    for (int k = 1; k < points; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    GaussHermiteRule rule;
    for (int k = 0; k < points; ++k) {
        rule.nodes.push_back(eig.eigenvalues()(k));
        const double v = eig.eigenvectors()(0, k);
        rule.weights.push_back(v * v);
    }
    return rule;
}

double gaussian_expectation(const std::function<double(const Vector&)>& phi, const Vector& mean,
                            double variance, int points_per_axis) {
    const GaussHermiteRule rule = gauss_hermite(points_per_axis);
    const auto d = mean.size();
    const double sd = std::sqrt(variance);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Vector x(d);
    double acc = 0.0;
    while (true) {
        double w = 1.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const auto q = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
            x(k) = mean(k) + sd * rule.nodes[q];
            w *= rule.weights[q];
        }
        acc += w * phi(x);
        Eigen::Index k = d - 1;
        for (; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < points_per_axis) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k < 0) break;
    }
    return acc;
}

const char* to_string(Regime regime) { return regime == Regime::Smooth ? "smooth" : "lipschitz"; }

NamedProblem paper_benchmark(int d, double horizon) {
    if (d < 1) throw InvalidArgument("paper_benchmark: d must be >= 1");
    NamedProblem np;
    np.name = "benchmark";
    np.problem = brownian_problem(d, horizon);
    const double shift = (2.0 + d) / (2.0 * d);
    np.problem.generator = [shift](double, const Vector&, double y, const Vector& z) { return (y - shift) * z.sum(); };
    np.problem.terminal = [horizon](const Vector& x) {
        const double k = std::exp(horizon + x.sum());
        return k / (1.0 + k);
    };
    np.problem.exact_solution = [](double t, const Vector& x) {
        const double k = std::exp(t + x.sum());
        return k / (1.0 + k);
    };
    np.exact_u0 = 0.5;
    np.regime = Regime::Smooth;
    np.notes = "semilinear benchmark; u(t,x) = logistic(t + sum x), Y_0 = 1/2";
    return np;
}

NamedProblem linear_smooth(int d, double horizon) {
    if (d < 1) throw InvalidArgument("linear_smooth: d must be >= 1");
    NamedProblem np;
    np.name = "linear_smooth";
    np.problem = brownian_problem(d, horizon);
    np.problem.terminal = [](const Vector& x) { return std::exp(-0.5 * x.squaredNorm()); };
    // 32 points per axis already resolve this integrand to round-off
    const int points = d <= 2 ? 64 : (d <= 4 ? 32 : 16);
    np.exact_u0 = gaussian_expectation(np.problem.terminal, np.problem.x0, np.problem.horizon, points);
    np.regime = Regime::Smooth;
    np.notes = "f = 0, g = exp(-|x|^2/2); reference by tensor Gauss-Hermite quadrature";
    return np;
}

NamedProblem constant_terminal(int d, double c, double horizon) {
    NamedProblem np;
    np.name = "constant";
    np.problem = brownian_problem(d, horizon);
    np.problem.terminal = [c](const Vector&) { return c; };
    np.exact_u0 = c;
    np.regime = Regime::Smooth;
    np.notes = "f = 0, g constant";
    return np;
}

NamedProblem lipschitz_call(int d, double strike, double horizon) {
    NamedProblem np;
    np.name = "lipschitz_call";
    np.problem = brownian_problem(d, horizon);
    np.problem.terminal = [strike](const Vector& x) { return std::abs(x(0) - strike); };
    // E|m + sqrt(T) xi - K| = s [2 phi(a)] + (m - K) [1 - 2 Phi(-a)], a = (m - K) / s
    const double s = std::sqrt(np.problem.horizon);
    const double a = (np.problem.x0(0) - strike) / s;
    const double density = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf_neg = 0.5 * std::erfc(a / std::numbers::sqrt2);
    np.exact_u0 = s * 2.0 * density + (np.problem.x0(0) - strike) * (1.0 - 2.0 * cdf_neg);
    np.regime = Regime::Lipschitz;
    np.notes = "f = 0, g = |x_1 - K|; Lipschitz terminal data";
    return np;
}

namespace {
constexpr double kGbmDrift = 0.05;
constexpr double kGbmVol = 0.2;
constexpr double kGbmDiscount = 0.03;
}  // namespace

NamedProblem gbm_discounted(int d, double horizon) {
    if (d != 1) throw InvalidArgument("gbm_discounted: only d = 1 is provided");
    static constexpr double mu = kGbmDrift, vol = kGbmVol, rho = kGbmDiscount, x0 = 1.0;
    NamedProblem np;
    np.name = "gbm_discounted";
    Problem& p = np.problem;
    p.state_dim = p.brownian_dim = 1;
    p.drift = [](double, const Vector& x) { return Vector::Constant(1, mu * x(0)).eval(); };
    p.diffusion = [](double, const Vector& x) { return Matrix::Constant(1, 1, vol * x(0)).eval(); };
    p.diffusion_jacobian = [](double, const Vector&) {
        return std::vector<Matrix>(1, Matrix::Constant(1, 1, vol));
    };
    p.generator = [](double, const Vector&, double y, const Vector&) { return -rho * y; };
    p.generator_lipschitz_y = rho;
    p.terminal = [](const Vector& x) { return x(0); };
    p.x0 = Vector::Constant(1, x0);
    p.horizon = horizon;
    p.exact_solution = [horizon](double t, const Vector& x) { return x(0) * std::exp((mu - rho) * (horizon - t)); };
    np.exact_u0 = x0 * std::exp((mu - rho) * horizon);
    np.regime = Regime::Smooth;
    np.notes = "GBM mu = 0.05, s = 0.2, f = -0.03 y, g = x";
    return np;
}

const std::vector<ProblemEntry>& problem_registry() {
    static const std::vector<ProblemEntry> registry{
        {"benchmark", "semilinear logistic benchmark, exact Y_0 = 1/2", paper_benchmark},
        {"linear_smooth", "f = 0, Gaussian-bump terminal data", linear_smooth},
        {"constant", "f = 0, g = 1", [](int d, double T) { return constant_terminal(d, 1.0, T); }},
        {"lipschitz_call", "f = 0, g = |x_1 - 0.25| (Lipschitz regime)",
         [](int d, double T) { return lipschitz_call(d, 0.25, T); }},
        {"gbm_discounted", "1-d GBM with discounting generator", gbm_discounted},
    };
    return registry;
}

NamedProblem make_problem(const std::string& name, int d, double horizon) {
    if (!(horizon > 0.0)) throw InvalidArgument("make_problem: horizon must be positive");
    for (const auto& e : problem_registry()) {
        if (e.name == name) return e.make(d, horizon);
    }
    throw InvalidArgument("unknown problem '" + name + "'");
}

}  // namespace cubsde
