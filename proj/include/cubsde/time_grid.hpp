#pragma once

#include <vector>

namespace cubsde {

/// Discretisation t_i = T [1 - (1 - i/n)^gamma] of [0, T]. gamma = 1 gives the
/// uniform grid; gamma > 1 concentrates steps near T.
class TimeGrid {
public:
    static TimeGrid build(int n, double horizon, double gamma = 1.0);

    /// Inserts the midpoint of every step; even indices keep the original times.
    TimeGrid refine_midpoints() const;

    int steps() const { return static_cast<int>(steps_.size()); }
    double horizon() const { return times_.back(); }
    /// Exponent used to build the grid (inherited by refinements).
    double gamma() const { return gamma_; }
    bool refined() const { return refined_; }

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& step_sizes() const { return steps_; }
    double time(int i) const { return times_[static_cast<std::size_t>(i)]; }
    double step(int i) const { return steps_[static_cast<std::size_t>(i)]; }

private:
    TimeGrid(std::vector<double> times, double gamma, bool refined);

    std::vector<double> times_;
    std::vector<double> steps_;
    double gamma_ = 1.0;
    bool refined_ = false;
};

}  // namespace cubsde
