#include "cubsde/study.hpp"

#include "cubsde/errors.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace cubsde {

const char* to_string(Scheme scheme) { return scheme == Scheme::Plain ? "plain" : "extrapolated"; }

const SolveReport* SolveCache::find(const TimeGrid& grid) const {
    for (const auto& [times, report] : entries_)
        if (times == grid.times()) return &report;
    return nullptr;
}

const SolveReport& SolveCache::insert(const TimeGrid& grid, SolveReport report) {
    entries_.emplace_back(grid.times(), std::move(report));
    return entries_.back().second;
}

std::vector<StudyRow> run_study(const NamedProblem& np, const StudyConfig& config, SolveCache* cache) {
    for (std::size_t k = 1; k < config.n_list.size(); ++k) {
        if (config.n_list[k] <= config.n_list[k - 1]) throw InvalidArgument("n-list must be strictly ascending");
    }
    const CubatureFormula formula = make_order3(np.problem.brownian_dim);
    SolveCache local;
    SolveCache& memo = cache ? *cache : local;
    auto solve = [&](const TimeGrid& grid) -> const SolveReport& {
        if (const SolveReport* hit = memo.find(grid)) return *hit;
        return memo.insert(grid, sparse_solve(np.problem, grid, formula, config.solver));
    };
    auto error_of = [&](double u0) -> std::optional<double> {
        if (!np.exact_u0) return std::nullopt;
        return std::abs(u0 - *np.exact_u0);
    };

    std::vector<StudyRow> rows;
    for (int n : config.n_list) {
        StudyRow plain;
        plain.n = n;
        plain.gamma = config.gamma;
        StudyRow extra = plain;
        extra.scheme = Scheme::Extrapolated;
        try {
            const TimeGrid grid = TimeGrid::build(n, np.problem.horizon, config.gamma);
            const SolveReport coarse = solve(grid);
            plain.u0_estimate = coarse.u0;
            plain.total_nodes = coarse.total_nodes;
            plain.wall_seconds = coarse.wall_seconds;
            if (config.extrapolate) {
                const SolveReport& fine = solve(grid.refine_midpoints());
                extra.u0_estimate = 2.0 * fine.u0 - coarse.u0;
                extra.total_nodes = coarse.total_nodes + fine.total_nodes;
                extra.wall_seconds = coarse.wall_seconds + fine.wall_seconds;
            }
            plain.abs_error = error_of(plain.u0_estimate);
            extra.abs_error = error_of(extra.u0_estimate);
        } catch (const Error& e) {
            plain.failure = extra.failure = e.what();
        }
        rows.push_back(plain);
        if (config.extrapolate) rows.push_back(extra);
    }
    return rows;
}

std::optional<double> fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) {
        if (!(y[k] >= floor) || !(x[k] > 0.0) || !std::isfinite(y[k])) continue;
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(y[k]));
    }
    if (lx.size() < 2) return std::nullopt;
    const double m = static_cast<double>(lx.size());
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

namespace {

constexpr double kErrorFloor = 1e-13;

template <class XOf, class YOf>
std::optional<double> slope_for(const std::vector<StudyRow>& rows, Scheme scheme, XOf xof, YOf yof) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
        if (r.scheme != scheme || !r.ok() || !r.abs_error || *r.abs_error < kErrorFloor) continue;
        x.push_back(xof(r));
        y.push_back(yof(r));
    }
    return fit_loglog_slope(x, y, 0.0);
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' ? ' ' : c);
    }
    return out + "\"";
}

std::vector<Scheme> schemes_present(const std::vector<StudyRow>& rows) {
    std::vector<Scheme> out;
    for (Scheme s : {Scheme::Plain, Scheme::Extrapolated}) {
        for (const auto& r : rows) {
            if (r.scheme == s) {
                out.push_back(s);
                break;
            }
        }
    }
    return out;
}

std::string status_of(const StudyRow& r) { return r.ok() ? "ok" : csv_escape("error: " + r.failure); }

}  // namespace

std::optional<double> convergence_slope(const std::vector<StudyRow>& rows, Scheme scheme) {
    return slope_for(rows, scheme, [](const StudyRow& r) { return static_cast<double>(r.n); },
                     [](const StudyRow& r) { return *r.abs_error; });
}

std::optional<double> complexity_slope(const std::vector<StudyRow>& rows, Scheme scheme) {
    return slope_for(rows, scheme, [](const StudyRow& r) { return 1.0 / *r.abs_error; },
                     [](const StudyRow& r) { return static_cast<double>(r.total_nodes); });
}

std::optional<double> time_slope(const std::vector<StudyRow>& rows, Scheme scheme) {
    return slope_for(rows, scheme, [](const StudyRow& r) { return 1.0 / *r.abs_error; },
                     [](const StudyRow& r) { return std::max(r.wall_seconds, 1e-9); });
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_convergence_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << kCsvVersionLine << '\n';
    out << "n,gamma,scheme,u0_estimate,abs_error,total_nodes,wall_seconds,status\n";
    for (const auto& r : rows) {
        out << r.n << ',' << format_number(r.gamma) << ',' << to_string(r.scheme) << ','
            << (r.ok() ? format_number(r.u0_estimate) : "") << ',' << (r.ok() ? opt_number(r.abs_error) : "")
            << ',' << (r.ok() ? std::to_string(r.total_nodes) : "") << ',' << format_number(r.wall_seconds)
            << ',' << status_of(r) << '\n';
    }
    // Summary rows: n = "slope", abs_error carries the fitted log-log slope in n.
    for (Scheme s : schemes_present(rows)) {
        const double gamma = rows.empty() ? 1.0 : rows.front().gamma;
        out << "slope," << format_number(gamma) << ',' << to_string(s) << ",," << opt_number(convergence_slope(rows, s))
            << ",,,summary\n";
    }
}

void write_complexity_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << kCsvVersionLine << '\n';
    out << "n,gamma,scheme,total_nodes,wall_seconds,abs_error,u0_estimate,status\n";
    for (const auto& r : rows) {
        out << r.n << ',' << format_number(r.gamma) << ',' << to_string(r.scheme) << ','
            << (r.ok() ? std::to_string(r.total_nodes) : "") << ',' << format_number(r.wall_seconds) << ','
            << (r.ok() ? opt_number(r.abs_error) : "") << ',' << (r.ok() ? format_number(r.u0_estimate) : "")
            << ',' << status_of(r) << '\n';
    }
    // Summary rows: total_nodes and wall_seconds carry the slopes of
    // ln(nodes) and ln(seconds) against ln(1 / error).
    for (Scheme s : schemes_present(rows)) {
        const double gamma = rows.empty() ? 1.0 : rows.front().gamma;
        out << "slope," << format_number(gamma) << ',' << to_string(s) << ','
            << opt_number(complexity_slope(rows, s)) << ',' << opt_number(time_slope(rows, s)) << ",,,summary\n";
    }
}

nlohmann::json to_json(const CubatureFormula& formula) {
    nlohmann::json paths = nlohmann::json::array();
    for (std::size_t j = 0; j < formula.size(); ++j) {
        nlohmann::json bps = nlohmann::json::array();
        const auto& p = formula.paths[j];
        for (std::size_t k = 0; k < p.times().size(); ++k) {
            const Vector& x = p.positions()[k];
            bps.push_back({{"t", p.times()[k]}, {"x", std::vector<double>(x.data(), x.data() + x.size())}});
        }
        paths.push_back({{"weight", formula.weights[j]}, {"breakpoints", bps}});
    }
    return {{"order", formula.order}, {"dimension", formula.dimension}, {"horizon", formula.horizon}, {"paths", paths}};
}

nlohmann::json to_json(const MomentReport& report) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"beta", std::vector<int>(e.beta.letters().begin(), e.beta.letters().end())},
                           {"degree", e.beta.degree()},
                           {"cubature", e.cubature},
                           {"brownian", e.brownian},
                           {"defect", e.defect}});
    }
    return {{"order", report.order},
            {"dimension", report.dimension},
            {"tolerance", report.tolerance},
            {"pass", report.pass},
            {"max_defect_within_order", report.max_defect_within_order},
            {"next_order_constant", report.next_order_constant},
            {"odd_moments_vanish", report.odd_moments_vanish},
            {"entries", entries}};
}

nlohmann::json to_json(const SolveReport& report) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : report.layers) {
        layers.push_back({{"step", l.step},
                          {"h", l.h},
                          {"order", l.order},
                          {"requested_order", l.requested_order},
                          {"capped", l.capped},
                          {"nodes", l.nodes},
                          {"lower", l.lower},
                          {"upper", l.upper}});
    }
    nlohmann::json j = {{"u0", report.u0},
                        {"v0", std::vector<double>(report.v0.data(), report.v0.data() + report.v0.size())},
                        {"total_nodes", report.total_nodes},
                        {"wall_seconds", report.wall_seconds},
                        {"fixed_point", {{"calls", report.fixed_point_calls},
                                         {"iterations", report.fixed_point_iterations},
                                         {"max_iterations", report.fixed_point_max_iterations_seen}}},
                        {"cap_hits", report.cap_hits},
                        {"warnings", report.warnings},
                        {"config", {{"n", report.n},
                                    {"gamma", report.gamma},
                                    {"refined_grid", report.refined_grid},
                                    {"p_max", report.p_max},
                                    {"m_star", report.m_star}}},
                        {"layers", layers}};
    if (report.fixed_order) j["config"]["fixed_order"] = *report.fixed_order;
    return j;
}

nlohmann::json to_json(const ExtrapolatedReport& report) {
    return {{"u0", report.u0},
            {"total_nodes", report.total_nodes},
            {"wall_seconds", report.wall_seconds},
            {"coarse", to_json(report.coarse)},
            {"fine", to_json(report.fine)}};
}

nlohmann::json to_json(const SparseInterpolant& interp) {
    nlohmann::json coeffs = nlohmann::json::array();
    const auto& layout = interp.layout();
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const LevelIndex li = layout.level_index(k);
        coeffs.push_back({{"l", li.level}, {"j", li.position}, {"theta", interp.surpluses()[k]}});
    }
    return {{"cube", {{"lower", interp.cube().lower}, {"upper", interp.cube().upper}}},
            {"order", interp.order()},
            {"coefficients", coeffs}};
}

void write_layers_csv(std::ostream& out, const SolveReport& report) {
    out << kCsvVersionLine << '\n';
    out << "step,h,order,requested_order,capped,nodes";
    const std::size_t d = report.layers.empty() ? 0 : report.layers.front().lower.size();
    for (std::size_t k = 0; k < d; ++k) out << ",lower_" << k << ",upper_" << k;
    out << '\n';
    for (const auto& l : report.layers) {
        out << l.step << ',' << format_number(l.h) << ',' << l.order << ',' << l.requested_order << ','
            << (l.capped ? 1 : 0) << ',' << l.nodes;
        for (std::size_t k = 0; k < d; ++k) out << ',' << format_number(l.lower[k]) << ',' << format_number(l.upper[k]);
        out << '\n';
    }
}

}  // namespace cubsde
