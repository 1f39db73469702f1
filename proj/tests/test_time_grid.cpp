#include <doctest.h>

#include "cubsde/errors.hpp"
#include "cubsde/time_grid.hpp"

#include <cmath>
#include <numeric>

using namespace cubsde;

TEST_CASE("build examples") {
    CHECK(TimeGrid::build(4, 1.0).times() == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(TimeGrid::build(2, 1.0, 2.0).times() == std::vector<double>{0, 0.75, 1});
    const auto g = TimeGrid::build(5, 2.0);
    for (double h : g.step_sizes()) CHECK(h == doctest::Approx(0.4));
    CHECK_THROWS_AS(TimeGrid::build(4, 1.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::build(0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::build(4, 0.0), InvalidArgument);
}

TEST_CASE("closed form, endpoints, steps and the step sandwich") {
    for (int n : {1, 3, 7, 16, 50})
        for (double gamma : {1.0, 1.5, 2.0, 3.7})
            for (double T : {1.0, 0.3, 2.5}) {
                const auto g = TimeGrid::build(n, T, gamma);
                REQUIRE(g.steps() == n);
                CHECK(g.time(0) == 0.0);
                CHECK(g.time(n) == T);
                for (int i = 0; i <= n; ++i)
                    CHECK(g.time(i) == doctest::Approx(T * (1 - std::pow(1 - double(i) / n, gamma))));
                const double sum = std::accumulate(g.step_sizes().begin(), g.step_sizes().end(), 0.0);
                CHECK(sum == doctest::Approx(T).epsilon(1e-13));
                for (int k = 0; k < n; ++k) {
                    CHECK(g.step(k) > 0.0);
                    CHECK(g.step(k) == g.time(k + 1) - g.time(k));
                    const double lo = T * gamma / n * std::pow(1 - double(k + 1) / n, gamma - 1);
                    const double hi = T * gamma / n * std::pow(1 - double(k) / n, gamma - 1);
                    CHECK(g.step(k) >= lo * (1 - 1e-12));
                    CHECK(g.step(k) <= hi * (1 + 1e-12));
                }
            }
}

TEST_CASE("midpoint refinement") {
    const auto r = TimeGrid::build(2, 1.0).refine_midpoints();
    CHECK(r.times() == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(r.refined());
    CHECK(TimeGrid::build(2, 1.0, 2.0).refine_midpoints().times() == std::vector<double>{0, 0.375, 0.75, 0.875, 1});
    for (double gamma : {1.0, 2.5}) {
        const auto g = TimeGrid::build(9, 1.3, gamma);
        const auto f = g.refine_midpoints();
        REQUIRE(f.steps() == 18);
        CHECK(f.gamma() == gamma);
        for (int j = 0; j <= 9; ++j) CHECK(f.time(2 * j) == g.time(j));
        for (int k = 0; k < 18; ++k) CHECK(f.time(k + 1) > f.time(k));
    }
    // dyadic uniform grids refine onto the doubled grid exactly
    CHECK(TimeGrid::build(16, 1.0).refine_midpoints().times() == TimeGrid::build(32, 1.0).times());
}
