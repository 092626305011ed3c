#pragma once

// Scenario configuration. A config is a JSON object naming an experiment; every
// other key overrides the experiment's default document. Unknown keys are
// rejected with the nearest valid path, and the merged document is the fully
// resolved echo written into every report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ttclock/clock.hpp"
#include "ttclock/ensemble.hpp"

namespace ttclock {

using Json = nlohmann::ordered_json;

enum class Experiment {
    traversal_time,
    larmor,
    traversal_distance,
    dwell,
    ensemble_bound,
    accuracy_sweep,
    violation_search,
};

inline constexpr std::string_view kExperimentNames[] = {
    "traversal-time", "larmor", "traversal-distance", "dwell", "ensemble-bound", "accuracy-sweep", "violation-search",
};

inline std::string_view to_string(Experiment e) { return kExperimentNames[static_cast<std::size_t>(e)]; }

namespace detail {

inline std::size_t edit_distance(std::string_view a, std::string_view b)
{
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::string leaf_of(std::string_view path)
{
    const auto dot = path.rfind('.');
    return std::string(dot == std::string_view::npos ? path : path.substr(dot + 1));
}

inline void collect_paths(const Json& doc, const std::string& prefix, std::vector<std::string>& out, bool leaves_only)
{
    for (const auto& [key, value] : doc.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            if (!leaves_only)
                out.push_back(path);
            collect_paths(value, path, out, leaves_only);
        } else {
            out.push_back(path);
        }
    }
}

/// Valid path closest to `path`, comparing both full paths and leaf names.
inline std::string nearest_path(std::string_view path, const Json& defaults)
{
    std::vector<std::string> candidates;
    collect_paths(defaults, "", candidates, false);
    const std::string leaf = leaf_of(path);
    std::string best;
    std::size_t best_score = std::string::npos;
    for (const auto& c : candidates) {
        const std::size_t score = std::min(edit_distance(path, c), edit_distance(leaf, leaf_of(c)));
        if (score < best_score) {
            best_score = score;
            best = c;
        }
    }
    return best;
}

inline std::optional<Experiment> experiment_from(std::string_view name)
{
    for (std::size_t i = 0; i < std::size(kExperimentNames); ++i)
        if (kExperimentNames[i] == name)
            return static_cast<Experiment>(i);
    return std::nullopt;
}

inline const char* json_kind(const Json& v)
{
    if (v.is_null())
        return "null";
    if (v.is_boolean())
        return "boolean";
    if (v.is_number())
        return "number";
    if (v.is_string())
        return "string";
    if (v.is_array())
        return "array";
    return "object";
}

// A null default marks an optional number.
inline bool compatible(const Json& def, const Json& user)
{
    if (def.is_null() || def.is_number())
        return user.is_number() || (def.is_null() && user.is_null());
    if (def.is_boolean())
        return user.is_boolean();
    if (def.is_string())
        return user.is_string();
    if (def.is_array())
        return user.is_array() && std::all_of(user.begin(), user.end(), [](const Json& x) { return x.is_number(); });
    return user.is_object();
}

inline void merge_into(Json& target, const Json& user, const std::string& prefix, const Json& root_defaults)
{
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key))
            throw Error(Errc::configuration, "unknown key \"" + path + "\"; nearest valid key is \"" +
                                                 nearest_path(path, root_defaults) + "\"");
        Json& slot = target[key];
        if (!compatible(slot, value))
            throw Error(Errc::configuration, "key \"" + path + "\" expects " + json_kind(slot.is_null() ? Json(0.0) : slot) +
                                                 ", got " + json_kind(value));
        if (slot.is_object())
            merge_into(slot, value, path, root_defaults);
        else
            slot = value;
    }
}

inline const Json& at_path(const Json& doc, std::string_view path)
{
    const Json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        node = &node->at(key);
        if (dot == std::string_view::npos)
            return *node;
        start = dot + 1;
    }
}

inline Json& at_path(Json& doc, std::string_view path) { return const_cast<Json&>(at_path(std::as_const(doc), path)); }

} // namespace detail

/// Default document for an experiment: every accepted key with its default value.
inline Json default_document(Experiment e)
{
    Json doc;
    doc["experiment"] = std::string(to_string(e));
    doc["seed"] = 1;
    const Json grid = {{"n_points", 2048}, {"x_min", -64.0}, {"x_max", 64.0}};
    const Json packet = {{"x0", -20.0}, {"p0", 10.0}, {"sigma_x", 2.0}, {"mass", 1.0}};
    const Json region = {{"x1", 0.0}, {"x2", 5.0}};
    const Json pointer = {{"dP0", 1.0}, {"n_sectors", nullptr}, {"q_max", nullptr}, {"qmax_factor", 8.0},
                          {"window", nullptr}};
    switch (e) {
    case Experiment::traversal_time:
    case Experiment::accuracy_sweep: {
        doc["grid"] = grid;
        doc["packet"] = packet;
        doc["region"] = region;
        Json clock = pointer;
        clock["condition_on_transmission"] = false;
        if (e == Experiment::accuracy_sweep) {
            clock.erase("dP0");
            clock.erase("n_sectors");
            clock.erase("q_max");
            clock["dP0_values"] = Json::array();
            doc["region"]["x2"] = 1.0;
        }
        doc["clock"] = clock;
        doc["numerics"] = {{"dt", 0.004}, {"t_total", 5.0},
                           {"method", e == Experiment::accuracy_sweep ? "stationary" : "split-operator"}};
        break;
    }
    case Experiment::larmor:
        doc["grid"] = grid;
        doc["packet"] = packet;
        doc["region"] = region;
        doc["larmor"] = {{"j", 0.5}, {"omega", 0.2}};
        doc["numerics"] = {{"dt", 0.004}, {"t_total", 5.0}, {"method", "split-operator"}};
        break;
    case Experiment::traversal_distance: {
        doc["grid"] = {{"n_points", 4096}, {"x_min", -64.0}, {"x_max", 64.0}};
        doc["packet"] = packet;
        Json clock = pointer;
        clock["dP0"] = 0.5;
        doc["clock"] = clock;
        doc["distance"] = {{"t1", 0.5}, {"t2", 1.5}};
        doc["numerics"] = {{"dt", 1e-3}, {"t_total", 2.0}};
        break;
    }
    case Experiment::dwell:
        doc["grid"] = grid;
        doc["packet"] = packet;
        doc["region"] = region;
        doc["numerics"] = {{"dt", 0.005}, {"t_total", 5.0}};
        break;
    case Experiment::ensemble_bound:
        doc["ensemble"] = {{"mean_p", 10.0}, {"sigma_p", 0.1}, {"sigma_eps", 1e-3},
                           {"mass", 1.0},    {"L", 10.0},      {"n_samples", 1000000}};
        break;
    case Experiment::violation_search:
        doc["violation"] = {{"mean_p", 10.0}, {"sigma_p", 0.1},       {"mass", 1.0},
                            {"L_dp", 0.01},   {"sigma_eps", nullptr}, {"delta_T_values", Json::array()}};
        break;
    }
    doc["output"] = {{"directory", "ttclock-out"}};
    return doc;
}

struct PacketConfig {
    double x0 = 0.0;
    double p0 = 0.0;
    double sigma_x = 1.0;
    double mass = 1.0;
};

struct PointerConfig {
    double dP0 = 1.0;
    std::optional<std::size_t> n_sectors;
    std::optional<double> q_max;
    double qmax_factor = 8.0;
    std::optional<double> window;
    bool condition_on_transmission = false;
    std::vector<double> dP0_values;
};

struct Scenario {
    Experiment experiment = Experiment::traversal_time;
    /// Fully resolved document (defaults expanded).
    Json resolved;

    SpatialGrid grid;
    PacketConfig packet;
    PotentialProfile region;
    PointerConfig clock;
    double larmor_j = 0.5;
    double larmor_omega = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    double dt = 1e-3;
    double t_total = 1.0;
    SectorMethod method = SectorMethod::split_operator;

    ensemble::EnsembleSpec ensemble;
    std::size_t n_samples = 0;

    ensemble::MomentumDistribution violation_f;
    double violation_mass = 1.0;
    double violation_L_dp = 0.01;
    std::optional<double> violation_sigma_eps;
    std::vector<double> delta_T_values;

    std::uint64_t seed = 1;
    std::string output_directory;

    TraversalSetup traversal_setup(unsigned workers) const
    {
        TraversalSetup s;
        s.grid = grid;
        s.x0 = packet.x0;
        s.p0 = packet.p0;
        s.sigma_x = packet.sigma_x;
        s.mass = packet.mass;
        s.region = region;
        s.dt = dt;
        s.t_total = t_total;
        s.method = method;
        s.qmax_factor = clock.qmax_factor;
        s.window = clock.window;
        s.condition_on_transmission = clock.condition_on_transmission;
        s.workers = workers;
        return s;
    }
};

/// Nodes at cell midpoints of [x_min, x_max): region edges on round numbers
/// fall between nodes instead of on them.
inline SpatialGrid midpoint_grid(std::size_t n, double x_min, double x_max)
{
    require(x_max > x_min, Errc::configuration, "grid.x_max must exceed grid.x_min");
    const double dx = (x_max - x_min) / static_cast<double>(n);
    return make_grid(n, x_min - 0.5 * dx, x_max - 0.5 * dx);
}

namespace detail {

inline double number(const Json& doc, std::string_view path) { return at_path(doc, path).get<double>(); }

inline std::optional<double> optional_number(const Json& doc, std::string_view path)
{
    const Json& v = at_path(doc, path);
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}

inline std::uint64_t count(const Json& doc, std::string_view path, std::uint64_t minimum)
{
    const Json& v = at_path(doc, path);
    const double x = v.get<double>();
    require(x >= static_cast<double>(minimum) && x == std::floor(x) && x < 9.007199254740992e15, Errc::configuration,
            std::string(path) + " must be an integer >= " + std::to_string(minimum));
    return static_cast<std::uint64_t>(x);
}

inline std::vector<double> numbers(const Json& doc, std::string_view path)
{
    std::vector<double> out;
    for (const auto& x : at_path(doc, path))
        out.push_back(x.get<double>());
    return out;
}

inline void positive(const Json& doc, std::string_view path)
{
    const double v = number(doc, path);
    require(std::isfinite(v) && v > 0.0, Errc::configuration, std::string(path) + " must be positive");
}

inline std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

/// Cross-field checks name both fields.
inline void ordered(double lo, std::string_view lo_name, double hi, std::string_view hi_name)
{
    require(lo < hi, Errc::validation,
            std::string(lo_name) + " = " + fmt(lo) + " must lie below " + std::string(hi_name) + " = " + fmt(hi));
}

} // namespace detail

/// Builds a Scenario from a document (user config or already resolved).
inline Scenario scenario_from_json(const Json& user)
{
    using namespace detail;
    require(user.is_object(), Errc::configuration, "config must be a JSON object");
    require(user.contains("experiment") && user["experiment"].is_string(), Errc::configuration,
            "config needs an \"experiment\" string");
    const std::string name = user["experiment"].get<std::string>();
    const auto experiment = experiment_from(name);
    if (!experiment) {
        std::string best;
        std::size_t score = std::string::npos;
        for (auto n : kExperimentNames)
            if (edit_distance(name, n) < score) {
                score = edit_distance(name, n);
                best = n;
            }
        throw Error(Errc::configuration, "unknown experiment \"" + name + "\"; nearest is \"" + best + "\"");
    }

    Scenario s;
    s.experiment = *experiment;
    const Json defaults = default_document(s.experiment);
    s.resolved = defaults;
    merge_into(s.resolved, user, "", defaults);
    const Json& d = s.resolved;

    s.seed = count(d, "seed", 0);
    s.output_directory = d["output"]["directory"].get<std::string>();
    require(!s.output_directory.empty(), Errc::configuration, "output.directory must not be empty");

    const bool has_grid = d.contains("grid");
    if (has_grid) {
        const auto n = count(d, "grid.n_points", 16);
        ordered(number(d, "grid.x_min"), "grid.x_min", number(d, "grid.x_max"), "grid.x_max");
        s.grid = midpoint_grid(n, number(d, "grid.x_min"), number(d, "grid.x_max"));
        for (auto p : {"packet.p0", "packet.sigma_x", "packet.mass"})
            positive(d, p);
        s.packet = {number(d, "packet.x0"), number(d, "packet.p0"), number(d, "packet.sigma_x"),
                    number(d, "packet.mass")};
        const double lo = number(d, "grid.x_min"), hi = number(d, "grid.x_max");
        ordered(lo, "grid.x_min", s.packet.x0 - 6.0 * s.packet.sigma_x, "packet.x0 - 6 packet.sigma_x");
        ordered(s.packet.x0 + 6.0 * s.packet.sigma_x, "packet.x0 + 6 packet.sigma_x", hi, "grid.x_max");
    }
    if (d.contains("numerics")) {
        positive(d, "numerics.dt");
        positive(d, "numerics.t_total");
        s.dt = number(d, "numerics.dt");
        s.t_total = number(d, "numerics.t_total");
        require(s.dt <= s.t_total, Errc::validation,
                "numerics.dt = " + fmt(s.dt) + " exceeds numerics.t_total = " + fmt(s.t_total));
        if (d["numerics"].contains("method")) {
            const auto m = d["numerics"]["method"].get<std::string>();
            if (m == "split-operator")
                s.method = SectorMethod::split_operator;
            else if (m == "stationary")
                s.method = SectorMethod::stationary;
            else
                throw Error(Errc::configuration,
                            "numerics.method must be \"split-operator\" or \"stationary\", got \"" + m + "\"");
        }
    }
    if (d.contains("region")) {
        const double x1 = number(d, "region.x1"), x2 = number(d, "region.x2");
        ordered(x1, "region.x1", x2, "region.x2");
        ordered(number(d, "grid.x_min"), "grid.x_min", x1, "region.x1");
        ordered(x2, "region.x2", number(d, "grid.x_max"), "grid.x_max");
        ordered(s.packet.x0 + 4.0 * s.packet.sigma_x, "packet.x0 + 4 packet.sigma_x", x1, "region.x1");
        s.region = PotentialProfile::box(x1, x2, 1.0);
    }
    if (d.contains("clock")) {
        const Json& c = d["clock"];
        if (c.contains("dP0")) {
            positive(d, "clock.dP0");
            s.clock.dP0 = number(d, "clock.dP0");
        }
        if (c.contains("n_sectors")) {
            const bool n_set = !c["n_sectors"].is_null(), q_set = !c["q_max"].is_null();
            require(n_set == q_set, Errc::validation, "clock.n_sectors and clock.q_max must be given together");
            if (n_set) {
                s.clock.n_sectors = count(d, "clock.n_sectors", 2);
                positive(d, "clock.q_max");
                s.clock.q_max = number(d, "clock.q_max");
            }
        }
        positive(d, "clock.qmax_factor");
        s.clock.qmax_factor = number(d, "clock.qmax_factor");
        s.clock.window = optional_number(d, "clock.window");
        require(!s.clock.window || *s.clock.window > 0.0, Errc::configuration, "clock.window must be positive");
        if (c.contains("condition_on_transmission"))
            s.clock.condition_on_transmission = c["condition_on_transmission"].get<bool>();
        if (c.contains("dP0_values")) {
            s.clock.dP0_values = numbers(d, "clock.dP0_values");
            for (double v : s.clock.dP0_values)
                require(v > 0.0, Errc::configuration, "clock.dP0_values must be positive");
        }
    }
    if (d.contains("larmor")) {
        positive(d, "larmor.j");
        positive(d, "larmor.omega");
        s.larmor_j = number(d, "larmor.j");
        s.larmor_omega = number(d, "larmor.omega");
        require(std::abs(2.0 * s.larmor_j - std::round(2.0 * s.larmor_j)) < 1e-12, Errc::configuration,
                "larmor.j must be a multiple of 1/2");
    }
    if (d.contains("distance")) {
        s.t1 = number(d, "distance.t1");
        s.t2 = number(d, "distance.t2");
        require(s.t1 >= 0.0, Errc::configuration, "distance.t1 must be non-negative");
        ordered(s.t1, "distance.t1", s.t2, "distance.t2");
        require(s.t2 <= s.t_total, Errc::validation,
                "distance.t2 = " + fmt(s.t2) + " exceeds numerics.t_total = " + fmt(s.t_total));
    }
    if (d.contains("ensemble")) {
        s.ensemble = ensemble::make_ensemble(number(d, "ensemble.mean_p"), number(d, "ensemble.sigma_p"),
                                             number(d, "ensemble.sigma_eps"), number(d, "ensemble.mass"),
                                             number(d, "ensemble.L"));
        s.n_samples = count(d, "ensemble.n_samples", 10000);
    }
    if (d.contains("violation")) {
        s.violation_f = ensemble::gaussian_momentum(number(d, "violation.mean_p"), number(d, "violation.sigma_p"));
        positive(d, "violation.mass");
        s.violation_mass = number(d, "violation.mass");
        s.violation_L_dp = number(d, "violation.L_dp");
        require(s.violation_L_dp > 0.0 && s.violation_L_dp < 2.0, Errc::configuration,
                "violation.L_dp must lie in (0, 2)");
        s.violation_sigma_eps = optional_number(d, "violation.sigma_eps");
        s.delta_T_values = numbers(d, "violation.delta_T_values");
        require(!(s.violation_sigma_eps && !s.delta_T_values.empty()), Errc::validation,
                "violation.sigma_eps and violation.delta_T_values are mutually exclusive");
        require(!s.violation_sigma_eps || *s.violation_sigma_eps >= 0.0, Errc::configuration,
                "violation.sigma_eps must be non-negative");
    }
    return s;
}

inline Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    require(in.good(), Errc::configuration, "cannot read config file \"" + path + "\"");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::configuration, "\"" + path + "\" is not valid JSON: " + e.what());
    }
}

inline Scenario parse_config(const std::string& path) { return scenario_from_json(read_json_file(path)); }

/// Resolves a sweep axis to a dotted path of a numeric field. A bare name is
/// accepted when exactly one field carries it.
inline std::string resolve_axis(const Json& resolved, std::string_view axis)
{
    using namespace detail;
    std::vector<std::string> leaves;
    collect_paths(resolved, "", leaves, true);
    auto numeric = [&](const std::string& p) {
        const Json& v = at_path(resolved, p);
        return v.is_number() || v.is_null();
    };
    std::vector<std::string> matches;
    for (const auto& p : leaves)
        if (p == axis || (axis.find('.') == std::string_view::npos && leaf_of(p) == axis))
            matches.push_back(p);
    if (matches.empty())
        throw Error(Errc::configuration, "sweep axis \"" + std::string(axis) + "\" is not a field of this experiment; "
                                         "nearest is \"" + nearest_path(axis, resolved) + "\"");
    require(matches.size() == 1, Errc::configuration,
            "sweep axis \"" + std::string(axis) + "\" is ambiguous; use a dotted path");
    require(numeric(matches.front()) && matches.front() != "seed", Errc::configuration,
            "sweep axis \"" + matches.front() + "\" is not a sweepable numeric field");
    return matches.front();
}

/// Copy of the resolved document with one numeric field replaced.
inline Json with_value(const Json& resolved, const std::string& path, double value)
{
    Json doc = resolved;
    Json& slot = detail::at_path(doc, path);
    if (slot.is_number_integer() || slot.is_number_unsigned()) {
        require(value == std::floor(value), Errc::configuration, path + " takes integer values");
        slot = static_cast<std::int64_t>(value);
    } else {
        slot = value;
    }
    return doc;
}

} // namespace ttclock
