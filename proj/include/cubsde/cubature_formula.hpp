#pragma once

#include "cubsde/multi_index.hpp"

#include <Eigen/Core>

#include <vector>

namespace cubsde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Continuous piecewise-linear path in R^r starting at the origin, stored as
/// breakpoints (t_0 = 0 < t_1 < ... < t_K, x_0 = 0, x_1, ..., x_K).
class PiecewiseLinearPath {
public:
    PiecewiseLinearPath(std::vector<double> times, std::vector<Vector> positions);

    /// Straight line from the origin to `endpoint` over [0, duration].
    static PiecewiseLinearPath straight(const Vector& endpoint, double duration = 1.0);

    int dimension() const { return static_cast<int>(positions_.front().size()); }
    std::size_t segment_count() const { return times_.size() - 1; }
    double duration() const { return times_.back(); }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vector>& positions() const { return positions_; }

    double segment_duration(std::size_t k) const { return times_[k + 1] - times_[k]; }
    Vector segment_increment(std::size_t k) const { return positions_[k + 1] - positions_[k]; }

    /// omega(duration) - omega(0).
    const Vector& increment() const { return positions_.back(); }

    /// Brownian rescaling: positions times sqrt(h), time reparameterised from
    /// [0, duration] to [0, h * duration].
    PiecewiseLinearPath scaled(double h) const;

    PiecewiseLinearPath negated() const;

private:
    std::vector<double> times_;
    std::vector<Vector> positions_;
};

struct CubatureFormula {
    int order = 0;
    int dimension = 0;
    /// Length of the time interval the paths live on (1 for an unscaled formula).
    double horizon = 1.0;
    std::vector<double> weights;
    std::vector<PiecewiseLinearPath> paths;

    std::size_t size() const { return weights.size(); }

    /// Every path has a partner -path of equal weight.
    bool is_symmetric(double tol = 0.0) const;
};

/// Symmetric degree-3 formula: 2r straight paths to +-sqrt(r) e_k, weight 1/(2r).
CubatureFormula make_order3(int r);

/// Formula on [0, h]: paths scaled by sqrt(h), weights unchanged.
CubatureFormula scale(const CubatureFormula& formula, double h);

/// Largest degree accepted by iterated_integral.
inline constexpr int kMaxIntegralDegree = 6;

/// Exact iterated Stratonovich/Riemann-Stieltjes integral
///   int_{0 < t_1 < ... < t_k < T} d omega^{beta_1}_{t_1} ... d omega^{beta_k}_{t_k}
/// along the path, with omega^0_t = t. Throws InvalidArgument for degrees
/// beyond kMaxIntegralDegree or letters beyond the path dimension.
double iterated_integral(const PiecewiseLinearPath& path, const MultiIndex& beta);

/// Largest degree covered by the Brownian moment table.
inline constexpr int kMaxMomentDegree = 4;

/// E[J^beta_{0,1}] for Brownian motion. Nonzero exactly when beta splits into
/// consecutive blocks (0) and (i,i), i >= 1; then equals
/// 1 / (blocks! * 2^pairs). Throws InvalidArgument above kMaxMomentDegree.
double brownian_stratonovich_moment(const MultiIndex& beta);

struct MomentEntry {
    MultiIndex beta;
    double cubature = 0.0;
    double brownian = 0.0;
    double defect = 0.0;
};

struct MomentReport {
    int order = 0;
    int dimension = 0;
    double tolerance = 1e-12;
    /// Degrees 0 .. order + 1 (capped at the moment table limit).
    std::vector<MomentEntry> entries;
    bool pass = false;
    double max_defect_within_order = 0.0;
    /// Sum of |defect| over words of degree exactly order + 1.
    double next_order_constant = 0.0;
    /// True when every odd-degree cubature moment is exactly zero.
    bool odd_moments_vanish = false;
};

MomentReport validate_moments(const CubatureFormula& formula, double tolerance = 1e-12);

}  // namespace cubsde
