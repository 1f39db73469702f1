#include "cubsde/cubature_formula.hpp"

#include "cubsde/errors.hpp"

#include <cmath>
#include <numeric>

namespace cubsde {

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> times, std::vector<Vector> positions)
    : times_(std::move(times)), positions_(std::move(positions)) {
    if (times_.size() < 2 || times_.size() != positions_.size())
        throw InvalidArgument("PiecewiseLinearPath: need >= 2 matching breakpoints");
    if (times_.front() != 0.0) throw InvalidArgument("PiecewiseLinearPath: must start at t = 0");
    if (!positions_.front().isZero(0.0))
        throw InvalidArgument("PiecewiseLinearPath: must start at the origin");
    const auto dim = positions_.front().size();
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1]))
            throw InvalidArgument("PiecewiseLinearPath: breakpoint times must increase");
        if (positions_[k].size() != dim)
            throw InvalidArgument("PiecewiseLinearPath: inconsistent dimension");
    }
}

PiecewiseLinearPath PiecewiseLinearPath::straight(const Vector& endpoint, double duration) {
    return PiecewiseLinearPath({0.0, duration}, {Vector::Zero(endpoint.size()), endpoint});
}

PiecewiseLinearPath PiecewiseLinearPath::scaled(double h) const {
    if (!(h > 0.0)) throw InvalidArgument("PiecewiseLinearPath::scaled: h must be positive");
    const double root = std::sqrt(h);
    std::vector<double> t(times_.size());
    std::vector<Vector> x(positions_.size());
    for (std::size_t k = 0; k < times_.size(); ++k) {
        t[k] = times_[k] * h;
        x[k] = positions_[k] * root;
    }
    return PiecewiseLinearPath(std::move(t), std::move(x));
}

PiecewiseLinearPath PiecewiseLinearPath::negated() const {
    std::vector<Vector> x(positions_.size());
    for (std::size_t k = 0; k < positions_.size(); ++k) x[k] = -positions_[k];
    return PiecewiseLinearPath(times_, std::move(x));
}

bool CubatureFormula::is_symmetric(double tol) const {
    std::vector<bool> used(size(), false);
    for (std::size_t a = 0; a < size(); ++a) {
        if (used[a]) continue;
        bool found = false;
        for (std::size_t b = 0; b < size() && !found; ++b) {
            if (used[b] || b == a) continue;
            const auto& pa = paths[a];
            const auto& pb = paths[b];
            if (pa.times() != pb.times() || std::abs(weights[a] - weights[b]) > tol) continue;
            bool mirror = true;
            for (std::size_t k = 0; k < pa.positions().size() && mirror; ++k)
                mirror = (pa.positions()[k] + pb.positions()[k]).cwiseAbs().maxCoeff() <= tol;
            if (mirror) {
                used[a] = used[b] = true;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

CubatureFormula make_order3(int r) {
    if (r < 1) throw InvalidArgument("make_order3: dimension must be >= 1");
    CubatureFormula f;
    f.order = 3;
    f.dimension = r;
    f.horizon = 1.0;
    const double radius = std::sqrt(static_cast<double>(r));
    const double w = 1.0 / (2.0 * r);
    // Path j = 1..2r ends at (-1)^j sqrt(r) e_{ceil(j/2)}.
    for (int j = 1; j <= 2 * r; ++j) {
        Vector end = Vector::Zero(r);
        end((j + 1) / 2 - 1) = (j % 2 == 0 ? radius : -radius);
        f.weights.push_back(w);
        f.paths.push_back(PiecewiseLinearPath::straight(end));
    }
    return f;
}

CubatureFormula scale(const CubatureFormula& formula, double h) {
    if (!(h > 0.0)) throw InvalidArgument("scale: h must be positive");
    CubatureFormula out = formula;
    out.horizon = formula.horizon * h;
    for (auto& p : out.paths) p = p.scaled(h);
    return out;
}

namespace {

using Poly = std::vector<double>;  // coefficients in the local segment variable s in [0, 1]

double eval_poly(const Poly& p, double s) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * s + *it;
    return acc;
}

}  // namespace

double iterated_integral(const PiecewiseLinearPath& path, const MultiIndex& beta) {
    if (beta.degree() > kMaxIntegralDegree)
        throw InvalidArgument("iterated_integral: degree " + std::to_string(beta.degree()) +
                              " exceeds supported range");
    if (beta.max_letter() > path.dimension())
        throw InvalidArgument("iterated_integral: letter exceeds path dimension");

    const std::size_t nseg = path.segment_count();
    // Running integral as a polynomial per segment; I^{()} == 1.
    std::vector<Poly> current(nseg, Poly{1.0});
    for (int letter : beta.letters()) {
        double start = 0.0;
        for (std::size_t k = 0; k < nseg; ++k) {
            const double rate = (letter == 0) ? path.segment_duration(k)
                                              : path.segment_increment(k)(letter - 1);
            const Poly& p = current[k];
            Poly next(p.size() + 1, 0.0);
            next[0] = start;
            for (std::size_t c = 0; c < p.size(); ++c)
                next[c + 1] = rate * p[c] / static_cast<double>(c + 1);
            start = eval_poly(next, 1.0);
            current[k] = std::move(next);
        }
    }
    return eval_poly(current.back(), 1.0);
}

double brownian_stratonovich_moment(const MultiIndex& beta) {
    if (beta.degree() > kMaxMomentDegree)
        throw InvalidArgument("brownian_stratonovich_moment: degree " +
                              std::to_string(beta.degree()) + " exceeds table");
    int blocks = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < beta.length();) {
        if (beta[i] == 0) {
            ++blocks;
            ++i;
        } else if (i + 1 < beta.length() && beta[i + 1] == beta[i]) {
            ++blocks;
            ++pairs;
            i += 2;
        } else {
            return 0.0;
        }
    }
    double factorial = 1.0;
    for (int k = 2; k <= blocks; ++k) factorial *= k;
    return 1.0 / (factorial * std::ldexp(1.0, pairs));
}

MomentReport validate_moments(const CubatureFormula& formula, double tolerance) {
    MomentReport rep;
    rep.order = formula.order;
    rep.dimension = formula.dimension;
    rep.tolerance = tolerance;
    const int top = std::min(formula.order + 1, kMaxMomentDegree);
    // Moments are for paths on [0, 1]; rescale a formula living on [0, h].
    const CubatureFormula unit =
        formula.horizon == 1.0 ? formula : scale(formula, 1.0 / formula.horizon);

    bool odd_ok = true;
    for (const auto& beta : enumerate_degree_set(top, formula.dimension)) {
        MomentEntry e;
        e.beta = beta;
        for (std::size_t j = 0; j < unit.size(); ++j)
            e.cubature += unit.weights[j] * iterated_integral(unit.paths[j], beta);
        e.brownian = brownian_stratonovich_moment(beta);
        e.defect = e.cubature - e.brownian;
        if (beta.degree() <= formula.order)
            rep.max_defect_within_order = std::max(rep.max_defect_within_order, std::abs(e.defect));
        if (beta.degree() == formula.order + 1) rep.next_order_constant += std::abs(e.defect);
        if (beta.degree() % 2 == 1 && e.cubature != 0.0) odd_ok = false;
        rep.entries.push_back(std::move(e));
    }
    const double wsum = std::accumulate(formula.weights.begin(), formula.weights.end(), 0.0);
    bool weights_ok = std::abs(wsum - 1.0) < tolerance;
    for (double w : formula.weights) weights_ok = weights_ok && w > 0.0;
    rep.odd_moments_vanish = odd_ok;
    rep.pass = weights_ok && rep.max_defect_within_order < tolerance;
    return rep;
}

}  // namespace cubsde
