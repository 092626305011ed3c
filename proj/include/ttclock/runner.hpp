#pragma once

// Experiment orchestration: dispatches a Scenario to its pipeline and collects
// a JSON report plus CSV tables. Reports hold no timings, paths or worker
// counts, so identical scenarios give byte-identical output.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ttclock/distance.hpp"
#include "ttclock/ensemble.hpp"
#include "ttclock/larmor.hpp"
#include "ttclock/oracles.hpp"
#include "ttclock/scenario.hpp"

namespace ttclock {

inline constexpr const char* kVersion = "1.0.0";

struct Table {
    std::string name; ///< file name, e.g. "pointer.csv"
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunReport {
    Json document;
    std::vector<Table> tables;
};

/// %.17g keeps every double round-trippable.
inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_csv(const Table& t)
{
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out += (c ? "," : "") + t.columns[c];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out += (c ? "," : "") + format_number(row[c]);
        out += '\n';
    }
    return out;
}

namespace detail {

inline Json readout_json(const ClockReadout& r)
{
    return {{"mean_T", r.mean_T},
            {"spread_T", r.spread_T},
            {"transmitted_fraction", r.transmitted_fraction},
            {"conditioned", r.conditioned}};
}

inline Table pointer_table(const PointerDistribution& d, const char* name, const char* variable)
{
    Table t{name, {variable, "probability"}, {}};
    for (std::size_t i = 0; i < d.p_values.size(); ++i)
        t.rows.push_back({d.p_values[i], d.probabilities[i]});
    return t;
}

inline void check_norm_drift(double drift)
{
    require(drift <= kNormTolerance, Errc::resolution, "joint norm drift " + format_number(drift) + " exceeds 1e-9");
}

inline double norm_drift(const JointState& joint, const WaveFunction& particle)
{
    double weights = 0.0;
    for (const auto& s : joint.sectors)
        weights += std::norm(s.weight);
    return std::abs(joint.total_probability() - weights * particle.norm());
}

inline double max_boundary_density(const JointState& joint)
{
    if (joint.representation != Representation::position)
        return 0.0;
    double worst = 0.0;
    for (const auto& s : joint.sectors)
        worst = std::max(worst, boundary_density(s.state));
    return worst;
}

inline ClockSpec pointer_clock(const PointerConfig& c, double window)
{
    if (c.n_sectors)
        return init_continuous_clock(c.dP0, *c.n_sectors, *c.q_max);
    return continuous_clock_for_window(c.dP0, window, c.qmax_factor);
}

inline RunReport run_traversal_time(const Scenario& s, unsigned workers)
{
    const auto setup = s.traversal_setup(workers);
    const ClockSpec clock = pointer_clock(s.clock, setup.default_window(s.clock.dP0));
    const WaveFunction particle = init_gaussian(setup.grid, setup.x0, setup.p0, setup.sigma_x);
    const JointState joint =
        evolve_joint(make_joint(clock, particle), setup.region, setup.t_total, setup.dt, setup.mass, {s.method, workers});
    const auto dist = pointer_distribution(joint, {}, workers);
    const double drift = norm_drift(joint, particle);
    check_norm_drift(drift);

    const auto unconditioned = clock_readout(dist, false, joint, workers);
    Json conditioned = nullptr;
    if (unconditioned.transmitted_fraction > kMinTransmitted)
        conditioned = readout_json(clock_readout(dist, true, joint, workers));
    require(!s.clock.condition_on_transmission || !conditioned.is_null(), Errc::no_transmission,
            "no probability transmitted past the clock region");
    const Json selected = s.clock.condition_on_transmission ? conditioned : readout_json(unconditioned);

    const double classical = setup.classical_time();
    const double E_p = setup.kinetic_energy();
    const double mean_T = selected["mean_T"].get<double>();
    const double spread_T = selected["spread_T"].get<double>();
    const double bias = std::abs(mean_T - classical);
    const double total_error = std::hypot(spread_T, bias);

    RunReport r;
    Json& res = r.document["results"];
    res["mean_T"] = mean_T;
    res["spread_T"] = spread_T;
    res["transmitted_fraction"] = unconditioned.transmitted_fraction;
    res["conditioned"] = s.clock.condition_on_transmission;
    res["classical_time"] = classical;
    res["bias"] = bias;
    res["total_error"] = total_error;
    res["E_p"] = E_p;
    res["error_times_energy"] = total_error * E_p;
    res["dQ0"] = clock.dQ0();
    res["dQ0_over_E_p"] = clock.dQ0() / E_p;
    res["n_sectors"] = clock.n_sectors;
    res["q_max"] = clock.q_max;
    res["pointer_period"] = clock.pointer_period();
    res["unconditioned"] = readout_json(unconditioned);
    res["transmitted_only"] = conditioned;

    Json& diag = r.document["diagnostics"];
    diag["norm_drift"] = drift;
    diag["boundary_density"] = max_boundary_density(joint);
    diag["edge_mass"] = dist.edge_mass;
    diag["captured"] = dist.captured;
    diag["residual_region_probability"] = joint.residual_region_probability;
    diag["warning"] = joint.warning ? Json(*joint.warning) : Json(nullptr);
    r.tables.push_back(pointer_table(dist, "pointer.csv", "P"));
    return r;
}

inline RunReport run_larmor(const Scenario& s, unsigned workers)
{
    const WaveFunction particle = init_gaussian(s.grid, s.packet.x0, s.packet.p0, s.packet.sigma_x);
    const auto result = larmor_clock_run(particle, s.larmor_j, s.larmor_omega, s.region, s.t_total, s.dt,
                                         s.packet.mass, {s.method, workers});
    const double drift = norm_drift(result.joint, particle);
    check_norm_drift(drift);

    RunReport r;
    Json& res = r.document["results"];
    res["mean_T"] = result.readout.mean_T;
    res["spread_T"] = result.readout.spread_T;
    res["transmitted_fraction"] = result.readout.transmitted_fraction;
    res["classical_time"] = s.packet.mass * s.region.total_length() / s.packet.p0;
    res["phase"] = result.phase;
    res["j_x"] = result.j_x;
    res["j_y"] = result.j_y;
    res["perpendicular_spread"] = result.perpendicular_spread;

    Json& diag = r.document["diagnostics"];
    diag["norm_drift"] = drift;
    diag["boundary_density"] = max_boundary_density(result.joint);
    diag["residual_region_probability"] = result.joint.residual_region_probability;
    diag["warning"] = result.joint.warning ? Json(*result.joint.warning) : Json(nullptr);

    Table sectors{"sectors.csv", {"m", "q", "weight", "transmitted_probability"}, {}};
    const auto& grid = result.joint.sectors.front().state.grid;
    for (std::size_t i = 0; i < result.joint.sectors.size(); ++i) {
        const auto& sec = result.joint.sectors[i];
        double p = 0.0;
        for (std::size_t j = 0; j < grid.n_points; ++j)
            if (is_transmitted(result.joint, j))
                p += sec.state.density(j);
        sectors.rows.push_back({static_cast<double>(i) - s.larmor_j, sec.q, std::norm(sec.weight), p * grid.dx()});
    }
    r.tables.push_back(std::move(sectors));
    return r;
}

inline RunReport run_distance(const Scenario& s, unsigned workers)
{
    const WaveFunction particle = init_gaussian(s.grid, s.packet.x0, s.packet.p0, s.packet.sigma_x);
    const double interval = s.t2 - s.t1;
    const double dp = 0.5 / s.packet.sigma_x;
    // pointer width: dP0, the momentum spread over the interval, and the chirp
    // interval / (2 m dP0) picked up by the free spreading between kicks
    const double width = std::sqrt(s.clock.dP0 * s.clock.dP0 + std::pow(dp * interval / s.packet.mass, 2) +
                                   std::pow(interval / (2.0 * s.packet.mass * s.clock.dP0), 2));
    const double window = s.clock.window.value_or(16.0 * width);
    const KickSchedule schedule{s.t1, s.t2, pointer_clock(s.clock, window)};
    const auto d = run_traversal_distance(particle, schedule, s.t_total, s.dt, s.packet.mass, workers);

    double worst_intermediate = 0.0, worst_final = 0.0, min_dx_growth = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.per_sector_intermediate_p.size(); ++i) {
        const auto [q, p] = d.per_sector_intermediate_p[i];
        worst_intermediate = std::max(worst_intermediate, std::abs(p - (d.initial_p - q)));
        worst_final = std::max(worst_final, std::abs(d.per_sector_final_p[i] - d.initial_p));
        min_dx_growth = std::min(min_dx_growth, d.per_sector_final_dx[i] - d.initial_dx);
    }

    RunReport r;
    Json& res = r.document["results"];
    res["pointer_shift_mean"] = d.pointer_shift_mean;
    res["pointer_shift_spread"] = d.pointer_shift_spread;
    res["classical_distance"] = s.packet.p0 * interval / s.packet.mass;
    res["inferred_momentum"] = infer_intermediate_momentum(d.pointer_shift_mean, d.t1_snapped, d.t2_snapped,
                                                           s.packet.mass);
    res["initial_p"] = d.initial_p;
    res["max_intermediate_p_error"] = worst_intermediate;
    res["max_final_p_error"] = worst_final;
    res["min_dx_growth"] = min_dx_growth;
    res["n_sectors"] = schedule.clock.n_sectors;
    res["q_max"] = schedule.clock.q_max;

    Json& diag = r.document["diagnostics"];
    diag["t1_snapped"] = d.t1_snapped;
    diag["t2_snapped"] = d.t2_snapped;
    diag["t1_snap_error"] = d.t1_snap_error;
    diag["t2_snap_error"] = d.t2_snap_error;
    diag["edge_mass"] = d.distribution.edge_mass;

    Table sectors{"sectors.csv", {"q", "intermediate_p", "final_p", "final_dx"}, {}};
    for (std::size_t i = 0; i < d.per_sector_final_p.size(); ++i)
        sectors.rows.push_back({d.per_sector_intermediate_p[i].first, d.per_sector_intermediate_p[i].second,
                                d.per_sector_final_p[i], d.per_sector_final_dx[i]});
    r.tables.push_back(pointer_table(d.distribution, "pointer.csv", "X"));
    r.tables.push_back(std::move(sectors));
    return r;
}

inline RunReport run_dwell(const Scenario& s)
{
    const WaveFunction particle = init_gaussian(s.grid, s.packet.x0, s.packet.p0, s.packet.sigma_x);
    const double x1 = s.region.left(), x2 = s.region.right();
    std::vector<double> series;
    const double tau = dwell_time(particle, x1, x2, s.t_total, s.dt, s.packet.mass, &series);
    const double t_F = oracles::classical_times(s.packet.p0, s.packet.mass, s.packet.x0, x1, x2).t_F;

    RunReport r;
    Json& res = r.document["results"];
    res["dwell_time"] = tau;
    res["classical_t_F"] = t_F;
    res["relative_difference"] = (tau - t_F) / t_F;
    r.document["diagnostics"]["final_region_probability"] = series.back();

    Table t{"dwell.csv", {"t", "region_probability"}, {}};
    for (std::size_t i = 0; i < series.size(); ++i)
        t.rows.push_back({static_cast<double>(i) * s.dt, series[i]});
    r.tables.push_back(std::move(t));
    r.tables.push_back({"comparison.csv", {"dwell_time", "classical_t_F", "relative_difference"},
                        {{tau, t_F, (tau - t_F) / t_F}}});
    return r;
}

inline RunReport run_ensemble_bound(const Scenario& s, unsigned workers)
{
    using namespace ensemble;
    const auto& spec = s.ensemble;
    // sampling first: a regime violation outranks a quadrature failure
    const auto mc = monte_carlo_moments(spec, s.n_samples, s.seed, workers);
    const auto e1 = moment_exact(1, spec);
    const auto e2 = moment_exact(2, spec);
    const double a1 = moment_approx(1, spec), a2 = moment_approx(2, spec);
    const auto bound = uncertainty_product(spec);
    const double x = spec.expansion_parameter();
    const double budget = 5.0 * x * x;

    RunReport r;
    Json& res = r.document["results"];
    res["moment_exact_1"] = e1.value;
    res["moment_exact_2"] = e2.value;
    res["moment_approx_1"] = a1;
    res["moment_approx_2"] = a2;
    res["monte_carlo_1"] = mc.mean_pM;
    res["monte_carlo_2"] = mc.mean_pM2;
    res["monte_carlo_se_1"] = mc.se_pM;
    res["monte_carlo_se_2"] = mc.se_pM2;
    res["monte_carlo_z_1"] = (mc.mean_pM - e1.value) / mc.se_pM;
    res["monte_carlo_z_2"] = (mc.mean_pM2 - e2.value) / mc.se_pM2;
    res["expansion_parameter"] = x;
    res["approx_relative_error_2"] = std::abs(a2 - e2.value) / std::abs(e2.value);
    res["approx_budget"] = budget;
    res["mean_pM"] = bound.mean_pM;
    res["mean_pM2"] = bound.mean_pM2;
    res["delta_p2"] = bound.delta_p2;
    res["mean_E"] = bound.mean_E;
    res["dE"] = bound.dE;
    res["product_squared"] = bound.product_squared;
    res["bound_general"] = bound.bound_general;
    res["bound_simple"] = bound.bound_simple;
    res["small_eps"] = bound.small_eps;

    Json& diag = r.document["diagnostics"];
    diag["quadrature_error_1"] = e1.error_estimate;
    diag["quadrature_error_2"] = e2.error_estimate;
    diag["monte_carlo_samples"] = mc.n_samples;
    diag["monte_carlo_violations"] = mc.violations;
    diag["warning"] = bound.small_eps ? Json(nullptr) : Json("outside the small-eps regime");

    r.tables.push_back({"moments.csv",
                        {"alpha", "exact", "quadrature_error", "approx", "monte_carlo", "standard_error"},
                        {{1.0, e1.value, e1.error_estimate, a1, mc.mean_pM, mc.se_pM},
                         {2.0, e2.value, e2.error_estimate, a2, mc.mean_pM2, mc.se_pM2}}});
    return r;
}

/// Eight log-spaced values from 10/E_p down to 0.01/E_p.
inline std::vector<double> default_dP0_values(double E_p)
{
    std::vector<double> v;
    for (int i = 0; i < 8; ++i)
        v.push_back(10.0 / E_p * std::pow(1e-3, i / 7.0));
    return v;
}

inline RunReport run_accuracy_sweep(const Scenario& s, unsigned workers)
{
    const auto setup = s.traversal_setup(workers);
    const auto values = s.clock.dP0_values.empty() ? default_dP0_values(setup.kinetic_energy()) : s.clock.dP0_values;
    const auto rows = accuracy_sweep(setup, values);

    std::size_t best = 0;
    Table t{"accuracy.csv",
            {"dP0", "n_sectors", "mean_T", "spread_T", "transmitted_fraction", "bias", "total_error",
             "error_times_energy", "edge_mass", "residual_region_probability"},
            {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& w = rows[i];
        if (w.error_times_energy < rows[best].error_times_energy)
            best = i;
        t.rows.push_back({w.dP0, static_cast<double>(w.n_sectors), w.readout.mean_T, w.readout.spread_T,
                          w.readout.transmitted_fraction, w.bias, w.total_error, w.error_times_energy, w.edge_mass,
                          w.residual_region_probability});
    }
    RunReport r;
    Json& res = r.document["results"];
    res["E_p"] = setup.kinetic_energy();
    res["classical_time"] = setup.classical_time();
    res["dP0_values"] = values;
    res["argmin_dP0"] = rows[best].dP0;
    res["argmin_dP0_times_E_p"] = rows[best].dP0 * setup.kinetic_energy();
    res["min_error_times_energy"] = rows[best].error_times_energy;
    double worst_edge = 0.0;
    for (const auto& w : rows)
        worst_edge = std::max(worst_edge, w.edge_mass);
    r.document["diagnostics"]["max_edge_mass"] = worst_edge;
    r.tables.push_back(std::move(t));
    return r;
}

inline RunReport run_violation_search(const Scenario& s)
{
    using namespace ensemble;
    const auto e = energy_stats({s.violation_f, {}, s.violation_mass, 1.0});
    const double b = bound_general(e.mean_E, e.dE);
    std::vector<double> values = s.delta_T_values;
    if (values.empty()) {
        if (s.violation_sigma_eps)
            values = {*s.violation_sigma_eps};
        else
            for (double f : {0.0, 0.25, 0.5, 0.9, 0.99, 0.999, 1.0, 1.001, 1.01, 1.1, 2.0, 4.0})
                values.push_back(f * b);
    }
    const auto table = violation_search(s.violation_f, s.violation_mass, s.violation_L_dp, values);

    std::size_t flagged = 0;
    Table t{"violation.csv", {"delta_T", "product", "flagged", "below_threshold"}, {}};
    for (const auto& row : table.rows) {
        flagged += row.flagged;
        t.rows.push_back({row.delta_T, row.product, row.flagged ? 1.0 : 0.0, row.below_threshold ? 1.0 : 0.0});
    }
    RunReport r;
    Json& res = r.document["results"];
    res["L"] = table.L;
    res["mean_E"] = table.mean_E;
    res["dE"] = table.dE;
    res["bound_general"] = table.bound_general;
    res["threshold_closed_form"] = table.threshold_closed_form;
    res["threshold_root"] = table.threshold_root;
    res["threshold_relative_gap"] =
        std::abs(table.threshold_root - table.threshold_closed_form) / table.threshold_closed_form;
    res["flags_match"] = table.flags_match;
    res["n_flagged"] = flagged;
    res["n_values"] = table.rows.size();
    r.tables.push_back(std::move(t));
    return r;
}

inline Json report_header(const Scenario& s)
{
    Json doc;
    doc["tool"] = "ttclock";
    doc["version"] = kVersion;
    doc["status"] = "ok";
    doc["seed"] = s.seed;
    doc["scenario"] = s.resolved;
    return doc;
}

inline void finish(RunReport& r)
{
    Json tables = Json::array();
    for (const auto& t : r.tables)
        tables.push_back({{"file", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
    r.document["tables"] = tables;
}

} // namespace detail

/// Runs one scenario. Numerical failures propagate as Error.
inline RunReport run_scenario(const Scenario& s, unsigned workers = 1)
{
    workers = std::max(1u, workers);
    RunReport body;
    switch (s.experiment) {
    case Experiment::traversal_time: body = detail::run_traversal_time(s, workers); break;
    case Experiment::larmor: body = detail::run_larmor(s, workers); break;
    case Experiment::traversal_distance: body = detail::run_distance(s, workers); break;
    case Experiment::dwell: body = detail::run_dwell(s); break;
    case Experiment::ensemble_bound: body = detail::run_ensemble_bound(s, workers); break;
    case Experiment::accuracy_sweep: body = detail::run_accuracy_sweep(s, workers); break;
    case Experiment::violation_search: body = detail::run_violation_search(s); break;
    }
    RunReport r;
    r.document = detail::report_header(s);
    r.document["results"] = body.document["results"];
    r.document["diagnostics"] = body.document.contains("diagnostics") ? body.document["diagnostics"] : Json::object();
    r.tables = std::move(body.tables);
    detail::finish(r);
    return r;
}

/// One row per axis value. Rows run in parallel; the table keeps value order
/// and holds every scalar result of the experiment (booleans as 0/1).
inline RunReport run_sweep(const Scenario& base, std::string_view axis, std::span<const double> values,
                           unsigned workers = 1)
{
    require(!values.empty(), Errc::configuration, "sweep needs at least one value");
    const std::string path = resolve_axis(base.resolved, axis);
    for (double v : values)
        require(std::isfinite(v), Errc::configuration, "sweep values must be finite");

    std::vector<Json> results(values.size());
    std::vector<std::exception_ptr> failures(values.size());
    workers = std::max(1u, workers);
    const unsigned inner = values.size() >= workers ? 1u : workers;
    parallel_for(values.size(), values.size() >= workers ? workers : 1u, [&](std::size_t i) {
        try {
            const Scenario row = scenario_from_json(with_value(base.resolved, path, values[i]));
            results[i] = run_scenario(row, inner).document["results"];
        } catch (...) {
            failures[i] = std::current_exception();
        }
    });
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);

    Table t{"sweep.csv", {path}, {}};
    for (const auto& [key, value] : results.front().items())
        if (value.is_number() || value.is_boolean())
            t.columns.push_back(key);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::vector<double> row{values[i]};
        for (std::size_t c = 1; c < t.columns.size(); ++c) {
            const Json& v = results[i][t.columns[c]];
            row.push_back(v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0)
                          : v.is_number() ? v.get<double>()
                                          : std::numeric_limits<double>::quiet_NaN());
        }
        t.rows.push_back(std::move(row));
    }

    RunReport r;
    r.document = detail::report_header(base);
    r.document["sweep"] = {{"axis", path}, {"values", std::vector<double>(values.begin(), values.end())}};
    r.document["rows"] = results;
    r.tables.push_back(std::move(t));
    detail::finish(r);
    return r;
}

/// Report for a failed run: the error category, its exit code and message.
inline RunReport failure_report(const Scenario& s, const Error& e)
{
    RunReport r;
    r.document = detail::report_header(s);
    r.document["status"] = "error";
    r.document["error"] = {{"category", to_string(e.code())}, {"exit_code", exit_code(e.code())}, {"message", e.what()}};
    detail::finish(r);
    return r;
}

/// Writes report.json and every table into `directory`.
inline void write_report(const RunReport& r, const std::filesystem::path& directory)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    require(!ec, Errc::configuration, "cannot create output directory \"" + directory.string() + "\"");
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(directory / name, std::ios::binary);
        out << text;
        require(out.good(), Errc::configuration, "cannot write \"" + (directory / name).string() + "\"");
    };
    write("report.json", r.document.dump(2) + "\n");
    for (const auto& t : r.tables)
        write(t.name, format_csv(t));
}

} // namespace ttclock
