#include <doctest.h>

#include "cubsde/errors.hpp"
#include "cubsde/forward_flow.hpp"
#include "cubsde/problem_library.hpp"
#include "cubsde/quadrature.hpp"

#include <cmath>
#include <numeric>

using namespace cubsde;

namespace {

Problem gbm(double mu, double s, bool analytic_jacobian) {
    Problem p;
    p.drift = [mu](double, const Vector& x) { return Vector(mu * x); };
    p.diffusion = [s](double, const Vector& x) { return Matrix(Matrix::Constant(1, 1, s * x(0))); };
    if (analytic_jacobian)
        p.diffusion_jacobian = [s](double, const Vector&) { return std::vector<Matrix>(1, Matrix::Constant(1, 1, s)); };
    p.terminal = [](const Vector& x) { return x(0); };
    p.x0 = Vector::Constant(1, 1.0);
    return p;
}

// Exact flow of dX = (mu - s^2/2) X dt + s X dw along a straight path.
double gbm_flow(double x, double mu, double s, double h, double dw) {
    return x * std::exp((mu - 0.5 * s * s) * h + s * dw);
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("Stratonovich drift") {
    const auto w = brownian_problem(3);
    const Vector x = vec({0.3, -1.0, 2.0});
    CHECK(stratonovich_drift(w, 0.0, x) == w.drift(0.0, x));

    for (bool analytic : {true, false}) {
        const auto p = gbm(0.07, 0.4, analytic);
        for (double x0 : {0.5, 1.0, 3.0}) {
            const double expect = 0.07 * x0 - 0.4 * 0.4 * x0 / 2;
            CHECK(stratonovich_drift(p, 0.0, Vector::Constant(1, x0))(0) == doctest::Approx(expect).epsilon(1e-9));
        }
    }

    // diagonal sigma_ii(x_i): only the matching component is corrected
    Problem q;
    q.state_dim = q.brownian_dim = 2;
    q.drift = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
    q.diffusion = [](double, const Vector& x) {
        Matrix s = Matrix::Zero(2, 2);
        s(0, 0) = std::sin(x(0));
        s(1, 1) = 2.0;
        return s;
    };
    q.terminal = [](const Vector&) { return 0.0; };
    q.x0 = Vector::Zero(2);
    const Vector b = stratonovich_drift(q, 0.0, vec({0.7, 5.0}));
    CHECK(b(0) == doctest::Approx(-0.5 * std::sin(0.7) * std::cos(0.7)).epsilon(1e-9));
    CHECK(std::abs(b(1)) < 1e-12);

    const auto jac = diffusion_jacobian_fd(q, 0.0, vec({0.7, 5.0}));
    REQUIRE(jac.size() == 2);
    CHECK(jac[0](0, 0) == doctest::Approx(std::cos(0.7)).epsilon(1e-9));
    CHECK(std::abs(jac[1](1, 1)) < 1e-12);
}

TEST_CASE("ode_step on constant coefficients is exact") {
    const auto w = brownian_problem(2);
    const auto path = PiecewiseLinearPath::straight(vec({0.3, -0.4}), 0.5);
    const Vector x = vec({1.0, 2.0});
    CHECK(ode_step(w, 0.0, 0.5, x, path) == x + path.increment());
    auto slow = w;
    slow.constant_coefficients = false;
    CHECK((ode_step(slow, 0.0, 0.5, x, path) - (x + path.increment())).norm() < 1e-15);

    Problem c;
    c.brownian_dim = 1;
    c.drift = [](double, const Vector&) { return Vector(Vector::Constant(1, 1.5)); };
    c.diffusion = [](double, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    c.terminal = [](const Vector&) { return 0.0; };
    c.x0 = Vector::Zero(1);
    const auto p1 = PiecewiseLinearPath::straight(Vector::Constant(1, 0.9), 0.2);
    CHECK(ode_step(c, 0.1, 0.3, Vector::Constant(1, 2.0), p1)(0) == doctest::Approx(2.0 + 1.5 * 0.2).epsilon(1e-15));

    CHECK_THROWS_AS(ode_step(w, 0.0, 0.25, x, path), InvalidArgument);
    CHECK_THROWS_AS(ode_step(w, 0.5, 0.5, x, path), InvalidArgument);
}

TEST_CASE("ode_step on GBM against the exact flow and finer integrations") {
    const double mu = 0.05, s = 0.2, h = 1.0 / 16;
    const auto p = gbm(mu, s, true);
    const auto f = scale(make_order3(1), h);
    for (const auto& path : f.paths) {
        const double x = 1.3;
        const double ref = ode_step(p, 0.0, h, Vector::Constant(1, x), path, 4 * 64)(0);
        const double got = ode_step(p, 0.0, h, Vector::Constant(1, x), path)(0);
        CHECK(std::abs(got - ref) / std::abs(ref) < 1e-10);
        CHECK(std::abs(got - gbm_flow(x, mu, s, h, path.increment()(0))) / ref < 1e-10);
    }

    // fourth order: halving the substep cuts the error about 16x
    const double bmu = 0.3, bs = 0.9;
    const auto q = gbm(bmu, bs, true);
    const auto path = PiecewiseLinearPath::straight(Vector::Constant(1, 1.5));
    const double exact = gbm_flow(1.0, bmu, bs, 1.0, 1.5);
    double prev = 0.0;
    for (int sub : {2, 4, 8, 16}) {
        const double err = std::abs(ode_step(q, 0.0, 1.0, Vector::Constant(1, 1.0), path, sub)(0) - exact);
        if (prev > 0.0) {
            CHECK(prev / err > 12.0);
            CHECK(prev / err < 20.0);
        }
        prev = err;
    }
}

TEST_CASE("integration failures are reported") {
    Problem p;
    p.drift = [](double, const Vector& x) { return Vector(x.array().exp()); };
    p.diffusion = [](double, const Vector&) { return Matrix(Matrix::Identity(1, 1)); };
    p.terminal = [](const Vector&) { return 0.0; };
    p.x0 = Vector::Constant(1, 700.0);
    const auto path = PiecewiseLinearPath::straight(Vector::Constant(1, 0.1));
    CHECK_THROWS_AS(ode_step(p, 0.0, 1.0, p.x0, path), IntegrationFailure);
    const auto grid = TimeGrid::build(2, 2.0);
    try {
        children(p, grid, 1, p.x0, make_order3(1));
        FAIL("expected a failure");
    } catch (const IntegrationFailure& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}

TEST_CASE("children") {
    const auto w = brownian_problem(1);
    const auto grid = TimeGrid::build(4, 1.0);
    const auto cs = children(w, grid, 0, Vector::Constant(1, 0.3), make_order3(1));
    REQUIRE(cs.size() == 2);
    CHECK(cs.states[0](0) == doctest::Approx(-0.2));
    CHECK(cs.states[1](0) == doctest::Approx(0.8));
    CHECK(cs.weights == std::vector<double>{0.5, 0.5});
    CHECK(cs.increments[0](0) == -0.5);
    CHECK(cs.increments[1](0) == 0.5);

    const auto w3 = brownian_problem(3);
    const Vector x = vec({0.1, 0.2, 0.3});
    const auto c3 = children(w3, TimeGrid::build(3, 1.0), 2, x, make_order3(3));
    Vector mean_inc = Vector::Zero(3), mean_state = Vector::Zero(3);
    double wsum = 0;
    for (std::size_t j = 0; j < c3.size(); ++j) {
        mean_inc += c3.weights[j] * c3.increments[j];
        mean_state += c3.weights[j] * c3.states[j];
        wsum += c3.weights[j];
    }
    CHECK(wsum == doctest::Approx(1.0));
    CHECK(mean_inc.norm() == 0.0);
    CHECK((mean_state - x).norm() < 1e-15);
    CHECK_THROWS_AS(children(w3, TimeGrid::build(3, 1.0), 3, x, make_order3(3)), InvalidArgument);
}

TEST_CASE("forward expectation") {
    // X = W, g(x) = x^2: the order-3 formula reproduces E[W_T^2] = T exactly
    auto w = brownian_problem(2);
    const auto sq = [](const Vector& x) { return x.squaredNorm(); };
    CHECK(forward_expectation(w, TimeGrid::build(5, 1.0), make_order3(2), sq) == doctest::Approx(2.0).epsilon(1e-12));

    // GBM: E[X_T] = x0 exp(mu T) up to the scheme error
    const auto p = gbm(0.05, 0.2, true);
    const double e8 = std::abs(forward_expectation(p, TimeGrid::build(8, 1.0), make_order3(1), p.terminal) - std::exp(0.05));
    CHECK(e8 < 1e-3);

    ForwardOptions tiny;
    tiny.atom_budget = 10;
    tiny.merge_tolerance = 0.0;
    CHECK_THROWS_AS(forward_expectation(w, TimeGrid::build(5, 1.0), make_order3(2), sq, tiny), BudgetExceeded);
}

TEST_CASE("forward rate against Gauss-Hermite") {
    const auto np = linear_smooth(1);
    const double oracle = gaussian_expectation(np.problem.terminal, Vector::Zero(1), 1.0, 64);
    CHECK(oracle == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    std::vector<double> ln_n, ln_e;
    for (int n : {8, 16, 32, 64, 128}) {
        const double est = forward_expectation(np.problem, TimeGrid::build(n, 1.0), make_order3(1), np.problem.terminal);
        ln_n.push_back(std::log(n));
        ln_e.push_back(std::log(std::abs(est - oracle)));
    }
    const double mx = std::accumulate(ln_n.begin(), ln_n.end(), 0.0) / 5;
    const double my = std::accumulate(ln_e.begin(), ln_e.end(), 0.0) / 5;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 5; ++i) {
        sxy += (ln_n[i] - mx) * (ln_e[i] - my);
        sxx += (ln_n[i] - mx) * (ln_n[i] - mx);
    }
    CHECK(sxy / sxx <= -0.9);
}
