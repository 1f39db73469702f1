#include "cubsde/time_grid.hpp"

#include "cubsde/errors.hpp"

#include <cmath>

namespace cubsde {

TimeGrid::TimeGrid(std::vector<double> times, double gamma, bool refined)
    : times_(std::move(times)), gamma_(gamma), refined_(refined) {
    steps_.resize(times_.size() - 1);
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
        steps_[i] = times_[i + 1] - times_[i];
        if (!(steps_[i] > 0.0)) throw InvalidArgument("TimeGrid: times must be strictly increasing");
    }
}

TimeGrid TimeGrid::build(int n, double horizon, double gamma) {
    if (n < 1) throw InvalidArgument("TimeGrid::build: n must be >= 1");
    if (!(horizon > 0.0)) throw InvalidArgument("TimeGrid::build: horizon must be positive");
    if (!(gamma >= 1.0)) throw InvalidArgument("TimeGrid::build: gamma must be >= 1");
    std::vector<double> t(static_cast<std::size_t>(n) + 1);
    t[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        const double frac = 1.0 - static_cast<double>(i) / n;
        t[static_cast<std::size_t>(i)] = horizon * (1.0 - std::pow(frac, gamma));
    }
    t[static_cast<std::size_t>(n)] = horizon;
    return TimeGrid(std::move(t), gamma, false);
}

TimeGrid TimeGrid::refine_midpoints() const {
    std::vector<double> t;
    t.reserve(2 * times_.size() - 1);
    for (std::size_t j = 0; j + 1 < times_.size(); ++j) {
        t.push_back(times_[j]);
        t.push_back(0.5 * (times_[j] + times_[j + 1]));
    }
    t.push_back(times_.back());
    return TimeGrid(std::move(t), gamma_, true);
}

}  // namespace cubsde
