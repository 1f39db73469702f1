// Command-line front end: cubature validation, single solves, convergence
// and complexity studies.

#include "cubsde/bsde_engine.hpp"
#include "cubsde/errors.hpp"
#include "cubsde/problem_library.hpp"
#include "cubsde/study.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct CommonOptions {
    std::string problem = "benchmark";
    int dim = 1;
    double gamma = 1.0;
    std::optional<double> horizon;
    int p_max = 14;
    std::optional<double> m_star;
    std::optional<int> fixed_order;
    int threads = 1;
    std::string out;
    bool seedless = false;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--problem", o.problem, "Problem name (see `list-problems`)");
    cmd.add_option("--dim", o.dim, "State / Brownian dimension")->check(CLI::PositiveNumber);
    cmd.add_option("--gamma", o.gamma, "Time-grid exponent (>= 1)")->check(CLI::Range(1.0, 1e6));
    cmd.add_option("--horizon", o.horizon, "Terminal time T (problem default when omitted)");
    cmd.add_option("--p-max", o.p_max, "Cap on the sparse order of any layer");
    cmd.add_option("--m-star", o.m_star, "Override m* in the sparse-order rule");
    cmd.add_option("--fixed-order", o.fixed_order, "Use this sparse order on every layer");
    cmd.add_option("--threads", o.threads, "Worker threads inside a layer")->check(CLI::PositiveNumber);
    cmd.add_option("--out", o.out, "Output file (stdout when omitted)");
    cmd.add_flag("--seedless", o.seedless, "Accepted for interface stability; the numerics use no RNG");
}

cubsde::NamedProblem resolve_problem(const CommonOptions& o) {
    return cubsde::make_problem(o.problem, o.dim, o.horizon.value_or(1.0));
}

cubsde::SolverConfig solver_config(const CommonOptions& o, const cubsde::NamedProblem& np) {
    cubsde::SolverConfig c;
    c.p_max = o.p_max;
    c.fixed_order = o.fixed_order;
    c.threads = o.threads;
    if (o.m_star) {
        c.m_star = *o.m_star;
    } else {
        c.m_star = np.regime == cubsde::Regime::Smooth ? cubsde::m_star_smooth(3)
                                                        : cubsde::m_star_lipschitz(3, np.problem.state_dim, o.gamma);
    }
    return c;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cubature-on-Wiener-space BSDE solver with sparse grids and extrapolation"};
    app.require_subcommand(1);

    int cub_dim = 1;
    std::string cub_out;
    auto* validate = app.add_subcommand("validate-cubature", "Check the order-3 formula's Stratonovich moments");
    validate->add_option("--dim", cub_dim, "Brownian dimension")->check(CLI::PositiveNumber);
    validate->add_option("--out", cub_out, "Output file (stdout when omitted)");
    bool with_paths = false;
    validate->add_flag("--paths", with_paths, "Include the formula's weights and breakpoints");

    CommonOptions solve_opts;
    int n = 16;
    bool solve_extrapolate = false;
    std::string layers_csv;
    auto* solve = app.add_subcommand("solve", "Single sparse-grid solve, JSON report");
    add_common(*solve, solve_opts);
    solve->add_option("--n", n, "Number of time steps")->check(CLI::PositiveNumber);
    solve->add_flag("--extrapolate", solve_extrapolate, "Richardson-Romberg combination with the refined grid");
    solve->add_option("--layers-csv", layers_csv, "Write per-layer diagnostics to this CSV");

    CommonOptions conv_opts;
    std::vector<int> conv_n{4, 8, 16, 32, 64};
    bool conv_extrapolate = false;
    auto* convergence = app.add_subcommand("convergence", "Error against number of steps, CSV");
    add_common(*convergence, conv_opts);
    convergence->add_option("--n-list", conv_n, "Ascending list of step counts")->delimiter(',');
    convergence->add_flag("--extrapolate", conv_extrapolate, "Also run the extrapolated scheme");

    CommonOptions cplx_opts;
    std::vector<int> cplx_n{4, 8, 16, 32, 64};
    bool cplx_extrapolate = true;
    auto* complexity = app.add_subcommand("complexity", "Nodes and time against error, CSV");
    add_common(*complexity, cplx_opts);
    complexity->add_option("--n-list", cplx_n, "Ascending list of step counts")->delimiter(',');
    complexity->add_flag("--extrapolate,!--plain-only", cplx_extrapolate,
                         "Include the extrapolated scheme (default on)");

    auto* list = app.add_subcommand("list-problems", "List built-in problems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto formula = cubsde::make_order3(cub_dim);
            const auto report = cubsde::validate_moments(formula);
            auto j = cubsde::to_json(report);
            if (with_paths) j["formula"] = cubsde::to_json(formula);
            emit(cub_out, j.dump(2) + "\n");
            return report.pass && report.odd_moments_vanish ? 0 : 1;
        }
        if (*solve) {
            const auto np = resolve_problem(solve_opts);
            const auto config = solver_config(solve_opts, np);
            const auto formula = cubsde::make_order3(np.problem.brownian_dim);
            nlohmann::json j;
            cubsde::SolveReport plain;
            if (solve_extrapolate) {
                const auto rep = cubsde::extrapolated_solve(np.problem, n, solve_opts.gamma, formula, config);
                j = cubsde::to_json(rep);
                plain = rep.coarse;
                if (np.exact_u0) j["abs_error"] = std::abs(rep.u0 - *np.exact_u0);
            } else {
                const auto grid = cubsde::TimeGrid::build(n, np.problem.horizon, solve_opts.gamma);
                plain = cubsde::sparse_solve(np.problem, grid, formula, config);
                j = cubsde::to_json(plain);
                if (np.exact_u0) j["abs_error"] = std::abs(plain.u0 - *np.exact_u0);
            }
            j["problem"] = {{"name", np.name}, {"dim", np.problem.state_dim}, {"regime", cubsde::to_string(np.regime)}};
            if (np.exact_u0) j["exact_u0"] = *np.exact_u0;
            emit(solve_opts.out, j.dump(2) + "\n");
            if (!layers_csv.empty()) {
                std::ostringstream csv;
                cubsde::write_layers_csv(csv, plain);
                emit(layers_csv, csv.str());
            }
            return 0;
        }
        if (*convergence || *complexity) {
            const bool conv = static_cast<bool>(*convergence);
            const CommonOptions& o = conv ? conv_opts : cplx_opts;
            const auto np = resolve_problem(o);
            cubsde::StudyConfig sc;
            sc.n_list = conv ? conv_n : cplx_n;
            sc.gamma = o.gamma;
            sc.extrapolate = conv ? conv_extrapolate : cplx_extrapolate;
            sc.solver = solver_config(o, np);
            const auto rows = cubsde::run_study(np, sc);
            std::ostringstream csv;
            if (conv)
                cubsde::write_convergence_csv(csv, rows);
            else
                cubsde::write_complexity_csv(csv, rows);
            emit(o.out, csv.str());
            return 0;
        }
        if (*list) {
            for (const auto& e : cubsde::problem_registry()) std::cout << e.name << "\t" << e.summary << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
