#include <doctest.h>

#include "cubsde/bsde_engine.hpp"
#include "cubsde/errors.hpp"
#include "cubsde/problem_library.hpp"

#include <cmath>

using namespace cubsde;

TEST_CASE("order rule") {
    CHECK(sparse_order_rule(2.0, 1.0 / 16, 1) == 5);
    CHECK(m_star_smooth(3) == 2.0);
    CHECK(m_star_lipschitz(3, 2, 1.0) == 2.5);
    CHECK(m_star_lipschitz(3, 1, 3.0) == 2.0);
    for (int d = 1; d <= 4; ++d)
        for (double m_star : {2.0, 2.5, 4.0}) {
            int prev = 0;
            for (double h = 1.0; h > 1e-4; h /= 1.7) {
                const int p = sparse_order_rule(m_star, h, d);
                // direct evaluation: p satisfies the inequality, p - 1 does not
                auto lhs = [d](int a) { return 2.0 * a - (d - 1) * std::log2(double(a - d + 1)); };
                CHECK(p > d - 1);
                CHECK(lhs(p) > -m_star * std::log2(h));
                if (p - 1 > d - 1) CHECK_FALSE(lhs(p - 1) > -m_star * std::log2(h));
                CHECK(p >= prev);
                prev = p;
            }
        }
    CHECK_THROWS_AS(sparse_order_rule(2.0, 0.0, 1), InvalidArgument);
}

TEST_CASE("implicit step") {
    const Vector z = Vector::Zero(1), x = Vector::Zero(1);
    CHECK(implicit_step(0.7, z, x, 0.0, 0.1, {}).value == 0.7);
    const auto constant = [](double, const Vector&, double, const Vector&) { return 3.0; };
    const auto c = implicit_step(0.7, z, x, 0.0, 0.1, constant);
    CHECK(c.value == doctest::Approx(1.0));
    CHECK(c.iterations == 1);
    const double lambda = 2.0, h = 0.1;
    const auto linear = [lambda](double, const Vector&, double y, const Vector&) { return -lambda * y; };
    const auto l = implicit_step(1.5, z, x, 0.0, h, linear);
    CHECK(std::abs(l.value - 1.5 / (1 + lambda * h)) < 1e-12);
    // geometric convergence with ratio lambda h = 0.2
    CHECK(l.iterations >= 14);
    CHECK(l.iterations <= 19);
    const auto wild = [](double, const Vector&, double y, const Vector&) { return 30.0 * y; };
    CHECK_THROWS_AS(implicit_step(1.0, z, x, 0.0, h, wild), ConvergenceFailure);
}

TEST_CASE("tree solve") {
    SUBCASE("f = 0 reduces to the forward expectation") {
        for (const auto& np : {linear_smooth(2), gbm_discounted(1), lipschitz_call(1)}) {
            auto p = np.problem;
            p.generator = nullptr;
            const auto grid = TimeGrid::build(4, p.horizon);
            const auto f = make_order3(p.brownian_dim);
            ForwardOptions exact;
            exact.merge_tolerance = 0.0;
            const double fwd = forward_expectation(p, grid, f, p.terminal, exact);
            CHECK(tree_solve(p, grid, f).u0 == doctest::Approx(fwd).epsilon(1e-14));
        }
    }
    SUBCASE("constants") {
        const auto np = constant_terminal(2, 1.75);
        CHECK(tree_solve(np.problem, TimeGrid::build(5, 1.0), make_order3(2)).u0 == doctest::Approx(1.75).epsilon(1e-15));
    }
    SUBCASE("linear generator discounts exactly") {
        const auto np = gbm_discounted();
        const auto grid = TimeGrid::build(6, 1.0);
        const auto t = tree_solve(np.problem, grid, make_order3(1));
        auto p = np.problem;
        p.generator = nullptr;
        const double undiscounted = tree_solve(p, grid, make_order3(1)).u0;
        CHECK(t.u0 == doctest::Approx(undiscounted / std::pow(1 + 0.03 / 6, 6)).epsilon(1e-12));
        CHECK(t.nodes_visited == 127);
    }
    SUBCASE("budget") {
        SolverConfig small;
        small.tree_budget = 100;
        CHECK_THROWS_AS(tree_solve(paper_benchmark(2).problem, TimeGrid::build(4, 1.0), make_order3(2), small), BudgetExceeded);
    }
}

TEST_CASE("layers") {
    auto w = brownian_problem(1);
    w.terminal = [](const Vector& x) { return std::cos(x(0)); };
    const auto grid = TimeGrid::build(4, 1.0);
    const auto layers = build_layers(w, grid, make_order3(1));
    REQUIRE(layers.size() == 4);
    CHECK(layers[0].size() == 1);
    CHECK(layers[1].cube() == Hypercube{{-0.5}, {0.5}});
    CHECK(layers[2].cube() == Hypercube{{-1.0}, {1.0}});
    CHECK(layers[1].order == sparse_order_rule(2.0, 0.25, 1));
    for (std::size_t i = 1; i < layers.size(); ++i) CHECK(layers[i].size() == count_nodes(layers[i].order, 1));

    // one child per direction leaves D_1's hull full in every coordinate
    const auto b = paper_benchmark(2);
    const auto bl = build_layers(b.problem, grid, make_order3(2));
    const double s = std::sqrt(2.0 * 0.25);
    CHECK(bl[1].cube() == Hypercube{{-s, -s}, {s, s}});

    SolverConfig capped;
    capped.p_max = 3;
    const auto fine = TimeGrid::build(64, 1.0);
    const auto rep = sparse_solve(w, fine, make_order3(1), capped);
    CHECK(rep.cap_hits == 63);
    CHECK(rep.warnings.size() == 63);
    for (const auto& l : rep.layers)
        if (l.step > 0) CHECK(l.order == 3);
    SolverConfig bad;
    bad.p_max = 1;
    CHECK_THROWS_AS(build_layers(b.problem, grid, make_order3(2), bad), InvalidArgument);
}

TEST_CASE("sparse solve agrees with the tree") {
    SolverConfig full;
    full.fixed_order = 12;
    for (int n : {4, 6}) {
        const auto b = paper_benchmark(1);
        const auto grid = TimeGrid::build(n, 1.0);
        const auto t = tree_solve(b.problem, grid, make_order3(1));
        const auto s = sparse_solve(b.problem, grid, make_order3(1), full);
        CHECK(std::abs(s.u0 - t.u0) < 1e-6);
        CHECK(std::abs(s.v0(0) - t.v0(0)) < 1e-5);
    }
    // f = 0: the gap shrinks as the order grows
    const auto np = linear_smooth(2);
    const auto grid = TimeGrid::build(5, 1.0);
    const double ref = tree_solve(np.problem, grid, make_order3(2)).u0;
    double prev = 1.0;
    for (int p : {3, 5, 7, 9}) {
        SolverConfig c;
        c.fixed_order = p;
        const double gap = std::abs(sparse_solve(np.problem, grid, make_order3(2), c).u0 - ref);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("sparse solve bookkeeping") {
    const auto c = constant_terminal(2, -0.4);
    const auto grid = TimeGrid::build(6, 1.0);
    const auto rep = sparse_solve(c.problem, grid, make_order3(2));
    CHECK(rep.u0 == doctest::Approx(-0.4).epsilon(1e-14));
    CHECK(rep.v0.norm() < 1e-14);
    std::size_t total = 1;
    for (const auto& l : rep.layers)
        if (l.step > 0) total += l.nodes;
    CHECK(rep.total_nodes == total);
    CHECK(rep.layers.size() == 6);
    CHECK(rep.n == 6);

    const auto b = paper_benchmark(2);
    SolverConfig one, three;
    three.threads = 3;
    const auto a1 = sparse_solve(b.problem, grid, make_order3(2), one);
    const auto a3 = sparse_solve(b.problem, grid, make_order3(2), three);
    CHECK(a1.u0 == a3.u0);
    CHECK(a1.fixed_point_iterations == a3.fixed_point_iterations);

    const auto ex = extrapolated_solve(b.problem, 6, 1.0, make_order3(2));
    CHECK(ex.u0 == 2 * ex.fine.u0 - ex.coarse.u0);
    CHECK(ex.total_nodes == ex.coarse.total_nodes + ex.fine.total_nodes);
    CHECK(ex.fine.refined_grid);
    CHECK(ex.coarse.u0 == a1.u0);
}

TEST_CASE("engine errors carry provenance") {
    auto p = brownian_problem(1);
    p.terminal = [](const Vector& x) { return 1.0 + x(0); };
    p.generator = [](double, const Vector&, double y, const Vector&) { return 40.0 * y; };
    try {
        sparse_solve(p, TimeGrid::build(4, 1.0), make_order3(1));
        FAIL("expected a convergence failure");
    } catch (const ConvergenceFailure& e) {
        CHECK(std::string(e.what()).find("layer") != std::string::npos);
    }
    p.generator_lipschitz_y = 40.0;
    CHECK_THROWS_AS(sparse_solve(p, TimeGrid::build(4, 1.0), make_order3(1)), InvalidArgument);
    CHECK_THROWS_AS(sparse_solve(p, TimeGrid::build(4, 2.0), make_order3(1)), InvalidArgument);
    CHECK_THROWS_AS(sparse_solve(p, TimeGrid::build(4, 1.0), make_order3(2)), InvalidArgument);
}
