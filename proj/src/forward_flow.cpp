#include "cubsde/forward_flow.hpp"

#include "cubsde/errors.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace cubsde {

void Problem::check() const {
    if (state_dim < 1 || brownian_dim < 1) throw InvalidArgument("Problem: dimensions must be >= 1");
    if (!drift || !diffusion || !terminal) throw InvalidArgument("Problem: drift, diffusion and terminal are required");
    if (x0.size() != state_dim) throw InvalidArgument("Problem: x0 has wrong dimension");
    if (!(horizon > 0.0)) throw InvalidArgument("Problem: horizon must be positive");
    const Matrix s = diffusion(0.0, x0);
    if (s.rows() != state_dim || s.cols() != brownian_dim)
        throw InvalidArgument("Problem: diffusion must be d x r");
    if (drift(0.0, x0).size() != state_dim) throw InvalidArgument("Problem: drift must be a d-vector");
}

Problem brownian_problem(int dim, double horizon) {
    Problem p;
    p.state_dim = dim;
    p.brownian_dim = dim;
    p.drift = [dim](double, const Vector&) { return Vector::Zero(dim).eval(); };
    p.diffusion = [dim](double, const Vector&) { return Matrix::Identity(dim, dim).eval(); };
    p.diffusion_jacobian = [dim](double, const Vector&) {
        return std::vector<Matrix>(static_cast<std::size_t>(dim), Matrix::Zero(dim, dim));
    };
    p.x0 = Vector::Zero(dim);
    p.horizon = horizon;
    p.constant_coefficients = true;
    return p;
}

std::vector<Matrix> diffusion_jacobian_fd(const Problem& problem, double t, const Vector& x) {
    static const double root_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    std::vector<Matrix> jac;
    jac.reserve(static_cast<std::size_t>(x.size()));
    Vector probe = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double eps = root_eps * (1.0 + std::abs(x(k)));
        probe(k) = x(k) + eps;
        Matrix up = problem.diffusion(t, probe);
        probe(k) = x(k) - eps;
        Matrix down = problem.diffusion(t, probe);
        probe(k) = x(k);
        jac.push_back((up - down) / (2.0 * eps));
    }
    return jac;
}

Vector stratonovich_drift(const Problem& problem, double t, const Vector& x) {
    Vector b = problem.drift(t, x);
    const Matrix sigma = problem.diffusion(t, x);
    const std::vector<Matrix> jac = problem.diffusion_jacobian
                                        ? problem.diffusion_jacobian(t, x)
                                        : diffusion_jacobian_fd(problem, t, x);
    for (Eigen::Index k = 0; k < sigma.rows(); ++k) {
        // sum_j sigma_{kj} d_k sigma_{ij}, for all i at once
        b.noalias() -= 0.5 * jac[static_cast<std::size_t>(k)] * sigma.row(k).transpose();
    }
    return b;
}

namespace {

Vector velocity(const Problem& problem, double t, const Vector& x, const Vector& omega_rate) {
    return stratonovich_drift(problem, t, x) + problem.diffusion(t, x) * omega_rate;
}

}  // namespace

Vector ode_step(const Problem& problem, double t0, double t1, const Vector& x,
                const PiecewiseLinearPath& path, int substeps) {
    if (!(t1 > t0)) throw InvalidArgument("ode_step: need t0 < t1");
    if (substeps < 1) throw InvalidArgument("ode_step: substeps must be >= 1");
    const double h = t1 - t0;
    if (std::abs(path.duration() - h) > 1e-12 * std::max(1.0, h))
        throw InvalidArgument("ode_step: path is not scaled to the step length");

    if (problem.constant_coefficients) {
        const Vector shift = stratonovich_drift(problem, t0, x) * h + problem.diffusion(t0, x) * path.increment();
        Vector state = x + shift;
        if (!state.allFinite()) throw IntegrationFailure("ode_step: non-finite state at t = " + std::to_string(t0));
        return state;
    }

    Vector state = x;
    for (std::size_t seg = 0; seg < path.segment_count(); ++seg) {
        const double seg_dt = path.segment_duration(seg);
        const Vector rate = path.segment_increment(seg) / seg_dt;
        const double dt = seg_dt / substeps;
        double t = t0 + path.times()[seg];
        for (int s = 0; s < substeps; ++s) {
            const Vector k1 = velocity(problem, t, state, rate);
            const Vector k2 = velocity(problem, t + 0.5 * dt, state + 0.5 * dt * k1, rate);
            const Vector k3 = velocity(problem, t + 0.5 * dt, state + 0.5 * dt * k2, rate);
            const Vector k4 = velocity(problem, t + dt, state + dt * k3, rate);
            state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = t0 + path.times()[seg] + (s + 1) * dt;
        }
        if (!state.allFinite()) {
            std::ostringstream msg;
            msg << "ode_step: non-finite state on segment " << seg << " starting at t = " << t0;
            throw IntegrationFailure(msg.str());
        }
    }
    return state;
}

ChildSet children(const Problem& problem, double t0, const CubatureFormula& scaled_formula,
                  const Vector& x, int substeps) {
    ChildSet out;
    const std::size_t kappa = scaled_formula.size();
    out.states.reserve(kappa);
    out.weights = scaled_formula.weights;
    out.increments.reserve(kappa);
    const double t1 = t0 + scaled_formula.horizon;
    for (std::size_t j = 0; j < kappa; ++j) {
        const auto& path = scaled_formula.paths[j];
        try {
            out.states.push_back(ode_step(problem, t0, t1, x, path, substeps));
        } catch (const IntegrationFailure& e) {
            std::ostringstream msg;
            msg << e.what() << " (path " << j << ", x = " << x.transpose() << ")";
            throw IntegrationFailure(msg.str());
        }
        out.increments.push_back(path.increment());
    }
    return out;
}

ChildSet children(const Problem& problem, const TimeGrid& grid, int i, const Vector& x,
                  const CubatureFormula& formula, int substeps) {
    if (i < 0 || i >= grid.steps()) throw InvalidArgument("children: step index out of range");
    try {
        return children(problem, grid.time(i), scale(formula, grid.step(i)), x, substeps);
    } catch (const IntegrationFailure& e) {
        throw IntegrationFailure(std::string(e.what()) + " at step " + std::to_string(i));
    }
}

double forward_expectation(const Problem& problem, const TimeGrid& grid,
                           const CubatureFormula& formula,
                           const std::function<double(const Vector&)>& phi,
                           const ForwardOptions& options) {
    struct Atom {
        Vector state;
        double weight;
    };
    std::vector<Atom> atoms{{problem.x0, 1.0}};
    const double tol = options.merge_tolerance;
    for (int i = 0; i < grid.steps(); ++i) {
        const CubatureFormula step = scale(formula, grid.step(i));
        if (atoms.size() * step.size() > options.atom_budget)
            throw BudgetExceeded("forward_expectation: atom budget exceeded at step " +
                                 std::to_string(i));
        std::vector<Atom> next;
        std::map<std::vector<long long>, std::size_t> index;
        for (const auto& a : atoms) {
            const ChildSet cs = children(problem, grid.time(i), step, a.state, options.substeps);
            for (std::size_t j = 0; j < cs.size(); ++j) {
                const double w = a.weight * cs.weights[j];
                if (tol > 0.0) {
                    std::vector<long long> key(static_cast<std::size_t>(cs.states[j].size()));
                    for (Eigen::Index k = 0; k < cs.states[j].size(); ++k)
                        key[static_cast<std::size_t>(k)] = std::llround(cs.states[j](k) / tol);
                    auto [it, fresh] = index.try_emplace(std::move(key), next.size());
                    if (!fresh) {
                        next[it->second].weight += w;
                        continue;
                    }
                }
                next.push_back({cs.states[j], w});
            }
        }
        atoms = std::move(next);
    }
    double acc = 0.0;
    for (const auto& a : atoms) acc += a.weight * phi(a.state);
    return acc;
}

}  // namespace cubsde
