#pragma once

#include "cubsde/bsde_engine.hpp"
#include "cubsde/cubature_formula.hpp"
#include "cubsde/problem_library.hpp"
#include "cubsde/sparse_grid.hpp"

#include <json.hpp>

#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cubsde {

/// Version line heading every CSV the tools emit.
inline constexpr const char* kCsvVersionLine = "# cubature-bsde v1";

enum class Scheme { Plain, Extrapolated };
const char* to_string(Scheme scheme);

struct StudyRow {
    int n = 0;
    double gamma = 1.0;
    Scheme scheme = Scheme::Plain;
    double u0_estimate = 0.0;
    std::optional<double> abs_error;
    std::size_t total_nodes = 0;
    double wall_seconds = 0.0;
    /// Empty on success; the failure message otherwise.
    std::string failure;

    bool ok() const { return failure.empty(); }
};

struct StudyConfig {
    std::vector<int> n_list;
    double gamma = 1.0;
    bool extrapolate = false;
    SolverConfig solver;
};

/// Solve reports keyed by the exact time points of the grid, so that a
/// refined n-grid and a plain 2n-grid with identical points are solved once.
/// Only valid for one problem and one solver configuration.
class SolveCache {
public:
    const SolveReport* find(const TimeGrid& grid) const;
    const SolveReport& insert(const TimeGrid& grid, SolveReport report);
    std::size_t size() const { return entries_.size(); }

private:
    std::deque<std::pair<std::vector<double>, SolveReport>> entries_;
};

/// One plain row per n, plus one extrapolated row per n when requested. A
/// failing run is recorded in its row and the study continues.
std::vector<StudyRow> run_study(const NamedProblem& problem, const StudyConfig& config,
                                SolveCache* cache = nullptr);

/// Least-squares slope of ln(y) against ln(x); points with y < floor are dropped.
/// Empty when fewer than two points remain.
std::optional<double> fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                                       double floor = 1e-13);

/// Slope of ln|error| against ln n for the rows of one scheme.
std::optional<double> convergence_slope(const std::vector<StudyRow>& rows, Scheme scheme);

/// Slope of ln(total_nodes) against ln(1 / |error|) for the rows of one scheme.
std::optional<double> complexity_slope(const std::vector<StudyRow>& rows, Scheme scheme);

/// Slope of ln(wall_seconds) against ln(1 / |error|).
std::optional<double> time_slope(const std::vector<StudyRow>& rows, Scheme scheme);

/// Convergence CSV: version line, header, data rows, one summary row per scheme.
void write_convergence_csv(std::ostream& out, const std::vector<StudyRow>& rows);

/// Complexity CSV: version line, header, data rows, one summary row per scheme.
void write_complexity_csv(std::ostream& out, const std::vector<StudyRow>& rows);

/// Shortest round-trip decimal form, used for every numeric CSV field.
std::string format_number(double value);

nlohmann::json to_json(const CubatureFormula& formula);
nlohmann::json to_json(const MomentReport& report);
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const ExtrapolatedReport& report);
nlohmann::json to_json(const SparseInterpolant& interp);

/// Per-layer diagnostics (step, h, order, nodes, cube extents) as CSV.
void write_layers_csv(std::ostream& out, const SolveReport& report);

}  // namespace cubsde
