#include "cubsde/bsde_engine.hpp"

#include "cubsde/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace cubsde {

double m_star_smooth(int m) { return (m + 1) / 2.0; }

double m_star_lipschitz(int m, int d, double gamma) {
    return std::max(d + (m - 1 - gamma) / (2.0 * gamma), (m + 1) / 2.0);
}

int sparse_order_rule(double m_star, double h, int d) {
    if (!(h > 0.0)) throw InvalidArgument("sparse_order_rule: h must be positive");
    if (d < 1) throw InvalidArgument("sparse_order_rule: d must be >= 1");
    const double threshold = -m_star * std::log2(h);
    for (int a = d;; ++a) {
        const double lhs = 2.0 * a - (d - 1) * std::log2(static_cast<double>(a - d + 1));
        if (lhs > threshold) return a;
    }
}

FixedPointResult implicit_step(double e_part, const Vector& z, const Vector& x, double t, double h,
                               const Problem::GeneratorFn& f, double tolerance, int max_iterations) {
    if (!f) return {e_part, 0};
    double y = e_part;
    for (int k = 1; k <= max_iterations; ++k) {
        const double next = e_part + h * f(t, x, y, z);
        if (!std::isfinite(next)) throw ConvergenceFailure("implicit_step: non-finite iterate");
        if (std::abs(next - y) <= tolerance) return {next, k - 1};
        y = next;
    }
    std::ostringstream msg;
    msg << "implicit_step: no convergence after " << max_iterations << " iterations at t = " << t
        << ", x = " << x.transpose();
    throw ConvergenceFailure(msg.str());
}

namespace {

void check_contraction(const Problem& problem, const TimeGrid& grid) {
    if (!problem.has_generator() || !problem.generator_lipschitz_y) return;
    for (double h : grid.step_sizes()) {
        if (h * *problem.generator_lipschitz_y >= 1.0)
            throw InvalidArgument("implicit step is not a contraction: h * L_f >= 1");
    }
}

void check_inputs(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula) {
    problem.check();
    if (formula.dimension != problem.brownian_dim)
        throw InvalidArgument("cubature dimension does not match the Brownian dimension");
    if (std::abs(grid.horizon() - problem.horizon) > 1e-12 * problem.horizon)
        throw InvalidArgument("time grid horizon does not match the problem horizon");
    check_contraction(problem, grid);
}

/// Runs body(k) for k in [0, count) on up to `threads` workers. The first
/// exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) body(k);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = w; k < count; k += workers) body(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct TreeWalker {
    const Problem& problem;
    const TimeGrid& grid;
    const std::vector<CubatureFormula>& steps;
    const SolverConfig& config;
    std::size_t visited = 0;

    // Returns u_i(x); writes v_i(x) when v_out is non-null.
    double solve(int i, const Vector& x, Vector* v_out) {
        ++visited;
        if (i == grid.steps()) return problem.terminal(x);
        const CubatureFormula& step = steps[static_cast<std::size_t>(i)];
        const double h = grid.step(i);
        const ChildSet cs = children(problem, grid.time(i), step, x, config.substeps);
        double e_part = 0.0;
        Vector v = Vector::Zero(problem.brownian_dim);
        for (std::size_t j = 0; j < cs.size(); ++j) {
            const double u_next = solve(i + 1, cs.states[j], nullptr);
            e_part += cs.weights[j] * u_next;
            v += (cs.weights[j] * u_next / h) * cs.increments[j];
        }
        if (v_out) *v_out = v;
        try {
            return implicit_step(e_part, v, x, grid.time(i), h, problem.generator,
                                 config.fixed_point_tolerance, config.fixed_point_max_iterations)
                .value;
        } catch (const ConvergenceFailure& e) {
            throw ConvergenceFailure(std::string(e.what()) + " (tree step " + std::to_string(i) + ")");
        }
    }
};

}  // namespace

TreeResult tree_solve(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula,
                      const SolverConfig& config) {
    check_inputs(problem, grid, formula);
    // Total nodes 1 + kappa + ... + kappa^n.
    const double kappa = static_cast<double>(formula.size());
    double total = 1.0, level = 1.0;
    for (int i = 0; i < grid.steps(); ++i) {
        level *= kappa;
        total += level;
    }
    if (total > static_cast<double>(config.tree_budget))
        throw BudgetExceeded("tree_solve: " + std::to_string(total) + " nodes exceed the budget of " +
                             std::to_string(config.tree_budget));

    std::vector<CubatureFormula> steps;
    for (int i = 0; i < grid.steps(); ++i) steps.push_back(scale(formula, grid.step(i)));
    TreeWalker walker{problem, grid, steps, config};
    TreeResult out;
    out.v0 = Vector::Zero(problem.brownian_dim);
    out.u0 = walker.solve(0, problem.x0, &out.v0);
    out.nodes_visited = walker.visited;
    return out;
}

namespace {

// Children of nodes in one step. Constant-coefficient problems reuse the
// per-path shift, which is what ode_step would add for any starting point.
class StepChildren {
public:
    StepChildren(const Problem& problem, const TimeGrid& grid, int step, const CubatureFormula& formula,
                 int substeps)
        : problem_(problem), t0_(grid.time(step)), substeps_(substeps), scaled_(scale(formula, grid.step(step))) {
        const double h = grid.step(step);
        for (const auto& p : scaled_.paths) increments_.push_back(p.increment());
        if (problem.constant_coefficients) {
            const Vector drift = stratonovich_drift(problem, t0_, problem.x0) * h;
            const Matrix sigma = problem.diffusion(t0_, problem.x0);
            for (const auto& dw : increments_) shifts_.push_back(drift + sigma * dw);
        }
    }

    std::size_t kappa() const { return scaled_.size(); }
    const std::vector<double>& weights() const { return scaled_.weights; }
    const Vector& increment(std::size_t j) const { return increments_[j]; }

    // Writes kappa * d coordinates, path-major.
    void compute(const double* x, double* out) const {
        const auto d = static_cast<Eigen::Index>(problem_.state_dim);
        Eigen::Map<const Vector> start(x, d);
        if (!shifts_.empty()) {
            for (std::size_t j = 0; j < shifts_.size(); ++j) {
                Eigen::Map<Vector> dst(out + static_cast<Eigen::Index>(j) * d, d);
                dst = start + shifts_[j];
                if (!dst.allFinite()) throw IntegrationFailure("non-finite child state");
            }
            return;
        }
        const ChildSet cs = children(problem_, t0_, scaled_, Vector(start), substeps_);
        for (std::size_t j = 0; j < cs.size(); ++j)
            Eigen::Map<Vector>(out + static_cast<Eigen::Index>(j) * d, d) = cs.states[j];
    }

private:
    const Problem& problem_;
    double t0_;
    int substeps_;
    CubatureFormula scaled_;
    std::vector<Vector> increments_;
    std::vector<Vector> shifts_;
};

std::string provenance(const std::exception& e, int layer, std::size_t node, std::size_t path) {
    std::ostringstream msg;
    msg << e.what() << " (layer " << layer << ", node " << node << ", path " << path << ")";
    return msg.str();
}

// Minimal hypercube of all children of the nodes of `layer`.
Hypercube hull_of_children(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula,
                           const SolverConfig& config, const LayerGrid& layer) {
    const auto d = static_cast<std::size_t>(problem.state_dim);
    const StepChildren gen(problem, grid, layer.step, formula, config.substeps);
    const std::vector<double> coords = layer.layout->coordinate_array();
    const std::size_t count = layer.size();
    const std::size_t kappa = gen.kappa();
    const auto chunks = static_cast<std::size_t>(std::max(1, std::min<int>(config.threads, static_cast<int>(count))));
    std::vector<Hypercube> partial(chunks);
    parallel_for(chunks, static_cast<int>(chunks), [&](std::size_t c) {
        Hypercube& cube = partial[c];
        cube.lower.assign(d, std::numeric_limits<double>::infinity());
        cube.upper.assign(d, -std::numeric_limits<double>::infinity());
        std::vector<double> kids(kappa * d);
        for (std::size_t node = c * count / chunks; node < (c + 1) * count / chunks; ++node) {
            try {
                gen.compute(coords.data() + node * d, kids.data());
            } catch (const IntegrationFailure& e) {
                throw IntegrationFailure(std::string(e.what()) + " (layer " + std::to_string(layer.step) +
                                         ", node " + std::to_string(node) + ")");
            }
            for (std::size_t j = 0; j < kappa; ++j)
                for (std::size_t k = 0; k < d; ++k) {
                    cube.lower[k] = std::min(cube.lower[k], kids[j * d + k]);
                    cube.upper[k] = std::max(cube.upper[k], kids[j * d + k]);
                }
        }
    });
    Hypercube cube = partial.front();
    for (std::size_t c = 1; c < chunks; ++c)
        for (std::size_t k = 0; k < d; ++k) {
            cube.lower[k] = std::min(cube.lower[k], partial[c].lower[k]);
            cube.upper[k] = std::max(cube.upper[k], partial[c].upper[k]);
        }
    return cube;
}

}  // namespace

std::vector<LayerGrid> build_layers(const Problem& problem, const TimeGrid& grid,
                                    const CubatureFormula& formula, const SolverConfig& config) {
    check_inputs(problem, grid, formula);
    const int d = problem.state_dim;
    if (!config.fixed_order && config.p_max < d)
        throw InvalidArgument("build_layers: p_max must be >= the state dimension");
    const int n = grid.steps();
    std::vector<LayerGrid> layers(static_cast<std::size_t>(n));

    LayerGrid& first = layers[0];
    first.step = 0;
    const Vector& x0 = problem.x0;
    Hypercube point{std::vector<double>(x0.data(), x0.data() + d), std::vector<double>(x0.data(), x0.data() + d)};
    first.layout = std::make_shared<const SparseGridLayout>(std::move(point), 0);

    for (int i = 1; i < n; ++i) {
        LayerGrid& layer = layers[static_cast<std::size_t>(i)];
        layer.step = i;
        if (config.fixed_order) {
            layer.requested_order = layer.order = *config.fixed_order;
        } else {
            layer.requested_order = sparse_order_rule(config.m_star, grid.step(i), d);
            layer.order = std::min(layer.requested_order, config.p_max);
            layer.capped = layer.requested_order > config.p_max;
        }
        layer.layout = std::make_shared<const SparseGridLayout>(
            hull_of_children(problem, grid, formula, config, layers[static_cast<std::size_t>(i - 1)]), layer.order);
    }
    return layers;
}

SolveReport sparse_solve(const Problem& problem, const TimeGrid& grid, const CubatureFormula& formula,
                         const SolverConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<LayerGrid> layers = build_layers(problem, grid, formula, config);
    const int n = grid.steps();
    const int r = problem.brownian_dim;
    const auto width = static_cast<std::size_t>(1 + r);

    SolveReport rep;
    rep.n = n;
    rep.gamma = grid.gamma();
    rep.refined_grid = grid.refined();
    rep.p_max = config.p_max;
    rep.m_star = config.m_star;
    rep.fixed_order = config.fixed_order;
    rep.total_nodes = 1;
    if (problem.has_generator() && !problem.generator_lipschitz_y)
        rep.warnings.push_back("no Lipschitz bound in y declared for the generator; contraction not checked");
    for (const auto& layer : layers) {
        LayerDiagnostics diag;
        diag.step = layer.step;
        diag.h = grid.step(layer.step);
        diag.order = layer.order;
        diag.requested_order = layer.requested_order;
        diag.capped = layer.capped;
        diag.nodes = layer.size();
        diag.lower = layer.cube().lower;
        diag.upper = layer.cube().upper;
        if (layer.step > 0) rep.total_nodes += layer.size();
        if (layer.capped) {
            ++rep.cap_hits;
            std::ostringstream msg;
            msg << "layer " << layer.step << ": order " << layer.requested_order << " capped at " << layer.order
                << " (h = " << diag.h << ")";
            rep.warnings.push_back(msg.str());
        }
        rep.layers.push_back(std::move(diag));
    }

    std::mutex stats_mutex;
    auto record = [&](const FixedPointResult& fp) {
        std::lock_guard lock(stats_mutex);
        ++rep.fixed_point_calls;
        rep.fixed_point_iterations += static_cast<std::size_t>(fp.iterations);
        rep.fixed_point_max_iterations_seen = std::max(rep.fixed_point_max_iterations_seen, fp.iterations);
    };

    // Surpluses of layer i+1: channel 0 is the E[u_{i+1}] part, channels 1..r are v.
    std::vector<double> next_surpluses;
    for (int i = n - 1; i >= 0; --i) {
        const LayerGrid& layer = layers[static_cast<std::size_t>(i)];
        const double h = grid.step(i);
        const StepChildren gen(problem, grid, i, formula, config.substeps);
        const std::size_t kappa = gen.kappa();
        const LayerGrid* next = (i + 1 < n) ? &layers[static_cast<std::size_t>(i + 1)] : nullptr;
        const double t_next = grid.time(i + 1);
        const double h_next = next ? grid.step(i + 1) : 0.0;
        const std::vector<double> coords = layer.layout->coordinate_array();
        const auto du = static_cast<std::size_t>(problem.state_dim);

        std::vector<double> values(layer.size() * width, 0.0);
        parallel_for(layer.size(), config.threads, [&](std::size_t node) {
            thread_local std::vector<double> kids;
            thread_local std::vector<double> clamped;
            std::vector<double> channels(width);
            Vector z(r);
            kids.resize(kappa * du);
            clamped.resize(du);
            try {
                gen.compute(coords.data() + node * du, kids.data());
            } catch (const IntegrationFailure& e) {
                throw IntegrationFailure(std::string(e.what()) + " (layer " + std::to_string(i) + ", node " +
                                         std::to_string(node) + ")");
            }
            double* out = values.data() + node * width;
            for (std::size_t j = 0; j < kappa; ++j) {
                const std::span<const double> cspan(kids.data() + j * du, du);
                const Eigen::Map<const Vector> c(cspan.data(), static_cast<Eigen::Index>(du));
                double u_next;
                if (!next) {
                    u_next = problem.terminal(c);
                } else {
                    try {
                        next->layout->clamp(cspan, clamped);
                        next->layout->evaluate(next_surpluses, width, clamped, channels);
                        for (int k = 0; k < r; ++k) z(k) = channels[static_cast<std::size_t>(k) + 1];
                        const FixedPointResult fp =
                            implicit_step(channels[0], z, c, t_next, h_next, problem.generator,
                                          config.fixed_point_tolerance, config.fixed_point_max_iterations);
                        record(fp);
                        u_next = fp.value;
                    } catch (const OutsideDomain& e) {
                        throw OutsideDomain(provenance(e, i, node, j));
                    } catch (const ConvergenceFailure& e) {
                        throw ConvergenceFailure(provenance(e, i, node, j));
                    }
                }
                const double w = gen.weights()[j] * u_next;
                out[0] += w;
                for (int k = 0; k < r; ++k)
                    out[static_cast<std::size_t>(k) + 1] += w * gen.increment(j)(k) / h;
            }
        });
        layer.layout->hierarchize(values, width);
        next_surpluses = std::move(values);
    }

    // D_0 = {x0}: the interpolant reproduces the single nodal value.
    const LayerGrid& root = layers.front();
    std::vector<double> channels(width);
    const Vector x0 = root.layout->clamp(problem.x0);
    root.layout->evaluate(next_surpluses, width, std::span<const double>(x0.data(), x0.size()), channels);
    rep.v0 = Vector(r);
    for (int k = 0; k < r; ++k) rep.v0(k) = channels[static_cast<std::size_t>(k) + 1];
    const FixedPointResult fp = implicit_step(channels[0], rep.v0, problem.x0, grid.time(0), grid.step(0),
                                              problem.generator, config.fixed_point_tolerance,
                                              config.fixed_point_max_iterations);
    record(fp);
    rep.u0 = fp.value;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rep;
}

ExtrapolatedReport extrapolated_solve(const Problem& problem, int n, double gamma,
                                      const CubatureFormula& formula, const SolverConfig& config) {
    const TimeGrid coarse = TimeGrid::build(n, problem.horizon, gamma);
    ExtrapolatedReport rep;
    rep.coarse = sparse_solve(problem, coarse, formula, config);
    rep.fine = sparse_solve(problem, coarse.refine_midpoints(), formula, config);
    rep.u0 = 2.0 * rep.fine.u0 - rep.coarse.u0;
    rep.total_nodes = rep.coarse.total_nodes + rep.fine.total_nodes;
    rep.wall_seconds = rep.coarse.wall_seconds + rep.fine.wall_seconds;
    return rep;
}

}  // namespace cubsde
