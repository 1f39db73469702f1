#include <doctest.h>

#include "cubsde/errors.hpp"
#include "cubsde/study.hpp"

#include <cmath>
#include <sstream>

using namespace cubsde;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Drops the wall_seconds column (index 6) of every data row.
std::string without_timing(const std::string& csv) {
    std::string out;
    for (const auto& l : lines(csv)) {
        auto f = fields(l);
        if (f.size() == 8) f.erase(f.begin() + 6);
        for (const auto& x : f) out += x + ",";
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3, 2.2250738585072014e-308, 1e300, -2.5, 0.0}) CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(64) == "64");
}

TEST_CASE("log-log slopes") {
    std::vector<double> x{2, 4, 8, 16}, y;
    for (double v : x) y.push_back(3.0 / (v * v));
    CHECK(*fit_loglog_slope(x, y) == doctest::Approx(-2.0));
    y[3] = 1e-15;
    CHECK(*fit_loglog_slope(x, y) == doctest::Approx(-2.0));
    CHECK_FALSE(fit_loglog_slope({1.0}, {1.0}));
    CHECK_FALSE(fit_loglog_slope({1.0, 2.0}, {1e-14, 1e-15}));
}

TEST_CASE("constant problem studies have zero error") {
    StudyConfig cfg;
    cfg.n_list = {2, 4, 8};
    const auto rows = run_study(constant_terminal(1), cfg);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.ok());
        CHECK(*r.abs_error == 0.0);
    }
    CHECK_FALSE(convergence_slope(rows, Scheme::Plain));
    std::ostringstream out;
    write_convergence_csv(out, rows);
    const auto ls = lines(out.str());
    CHECK(ls.size() == 2 + 3 + 1);
    CHECK(ls.back() == "slope,1,plain,,,,,summary");
}

TEST_CASE("convergence CSV layout and determinism") {
    StudyConfig cfg;
    cfg.n_list = {2, 4, 8};
    cfg.extrapolate = true;
    const auto np = paper_benchmark(1);
    SolveCache cache;
    const auto rows = run_study(np, cfg, &cache);
    REQUIRE(rows.size() == 6);
    // grids 2, 4, 8 and 16: the refined grids coincide with the doubled ones
    CHECK(cache.size() == 4);
    for (std::size_t k = 0; k + 1 < rows.size(); k += 2) {
        CHECK(rows[k].scheme == Scheme::Plain);
        CHECK(rows[k + 1].scheme == Scheme::Extrapolated);
        CHECK(*rows[k].abs_error == std::abs(rows[k].u0_estimate - 0.5));
    }
    CHECK(rows[0].total_nodes < rows[2].total_nodes);
    CHECK(rows[2].total_nodes < rows[4].total_nodes);
    CHECK(rows[1].u0_estimate == 2 * rows[2].u0_estimate - rows[0].u0_estimate);

    std::ostringstream a, b, c;
    write_convergence_csv(a, rows);
    write_convergence_csv(b, run_study(np, cfg));
    const auto ls = lines(a.str());
    CHECK(ls[0] == "# cubature-bsde v1");
    CHECK(ls[1] == "n,gamma,scheme,u0_estimate,abs_error,total_nodes,wall_seconds,status");
    CHECK(ls.size() == 2 + 6 + 2);
    CHECK(fields(ls[8])[0] == "slope");
    CHECK(fields(ls[9])[2] == "extrapolated");
    CHECK(std::stod(fields(ls[8])[4]) == doctest::Approx(*convergence_slope(rows, Scheme::Plain)));
    CHECK(without_timing(a.str()) == without_timing(b.str()));

    write_complexity_csv(c, rows);
    const auto cl = lines(c.str());
    CHECK(cl[1] == "n,gamma,scheme,total_nodes,wall_seconds,abs_error,u0_estimate,status");
    CHECK(cl.size() == 2 + 6 + 2);
    CHECK(fields(cl.back())[0] == "slope");
}

TEST_CASE("failures are recorded in the row") {
    NamedProblem np = constant_terminal(1);
    np.problem.terminal = [](const Vector& x) { return 1.0 + x(0); };
    np.problem.generator = [](double, const Vector&, double y, const Vector&) { return 20.0 * y; };
    StudyConfig cfg;
    cfg.n_list = {2, 64};
    const auto rows = run_study(np, cfg);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].ok());
    CHECK(rows[1].ok());
    std::ostringstream out;
    write_convergence_csv(out, rows);
    CHECK(lines(out.str())[2].find("error: ") != std::string::npos);

    cfg.n_list = {4, 2};
    CHECK_THROWS_AS(run_study(np, cfg), InvalidArgument);
}

TEST_CASE("JSON dumps") {
    const auto j = to_json(validate_moments(make_order3(2)));
    CHECK(j["pass"] == true);
    CHECK(to_json(make_order3(2))["paths"].size() == 4);
    const auto interp = SparseInterpolant::hierarchize(Hypercube{{0}, {1}}, 2, [](const Vector& x) { return x(0); });
    CHECK(to_json(interp)["order"] == 2);
    const auto rep = sparse_solve(paper_benchmark(1).problem, TimeGrid::build(4, 1.0), make_order3(1));
    const auto js = to_json(rep);
    CHECK(js["u0"].get<double>() == rep.u0);
    CHECK(js["layers"].size() == 4);
    std::ostringstream layers;
    write_layers_csv(layers, rep);
    CHECK(lines(layers.str()).size() == 2 + 4);
}
