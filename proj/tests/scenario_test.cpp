#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ttclock/scenario.hpp"

using namespace ttclock;

namespace {

Scenario parse(const std::string& text) { return scenario_from_json(Json::parse(text)); }

Error failure(const std::string& text)
{
    try {
        parse(text);
    } catch (const Error& e) {
        return e;
    }
    return Error(Errc::quadrature, "accepted");
}

} // namespace

TEST(EditDistance, Basics)
{
    EXPECT_EQ(detail::edit_distance("dP0", "dP0"), 0u);
    EXPECT_EQ(detail::edit_distance("dP00", "dP0"), 1u);
    EXPECT_EQ(detail::edit_distance("", "abc"), 3u);
    EXPECT_EQ(detail::edit_distance("kitten", "sitting"), 3u);
}

TEST(ParseConfig, MinimalTraversalTimeGetsDefaults)
{
    const auto s = parse(R"({"experiment": "traversal-time"})");
    EXPECT_EQ(s.experiment, Experiment::traversal_time);
    EXPECT_EQ(s.grid.n_points, 2048u);
    EXPECT_DOUBLE_EQ(s.grid.length(), 128.0);
    EXPECT_DOUBLE_EQ(s.packet.x0, -20.0);
    EXPECT_DOUBLE_EQ(s.packet.p0, 10.0);
    EXPECT_DOUBLE_EQ(s.region.total_length(), 5.0);
    EXPECT_DOUBLE_EQ(s.clock.dP0, 1.0);
    EXPECT_FALSE(s.clock.n_sectors);
    EXPECT_FALSE(s.clock.condition_on_transmission);
    EXPECT_EQ(s.method, SectorMethod::split_operator);
    EXPECT_DOUBLE_EQ(s.dt, 0.004);
    EXPECT_EQ(s.seed, 1u);
    // echo carries every default
    EXPECT_EQ(s.resolved, default_document(Experiment::traversal_time));
}

TEST(ParseConfig, GridNodesSitAtCellMidpoints)
{
    const auto g = midpoint_grid(16, 0.0, 16.0);
    EXPECT_DOUBLE_EQ(g.x(0), -0.5);
    EXPECT_DOUBLE_EQ(g.dx(), 1.0);
    const auto s = parse(R"({"experiment": "dwell"})");
    EXPECT_DOUBLE_EQ(s.grid.x(1024), -0.5 * s.grid.dx());
}

TEST(ParseConfig, OverridesMerge)
{
    const auto s = parse(R"({"experiment": "traversal-time", "packet": {"p0": 12},
                             "clock": {"n_sectors": 33, "q_max": 4.0, "condition_on_transmission": true},
                             "numerics": {"method": "stationary"}})");
    EXPECT_DOUBLE_EQ(s.packet.p0, 12.0);
    EXPECT_DOUBLE_EQ(s.packet.sigma_x, 2.0);
    EXPECT_EQ(*s.clock.n_sectors, 33u);
    EXPECT_DOUBLE_EQ(*s.clock.q_max, 4.0);
    EXPECT_TRUE(s.clock.condition_on_transmission);
    EXPECT_EQ(s.method, SectorMethod::stationary);
    // re-parsing the echo is a fixed point
    EXPECT_EQ(scenario_from_json(s.resolved).resolved, s.resolved);
}

TEST(ParseConfig, UnknownKeyNamesNearest)
{
    const auto nested = failure(R"({"experiment": "traversal-time", "clock": {"dP00": 1}})");
    EXPECT_EQ(nested.code(), Errc::configuration);
    EXPECT_NE(std::string(nested.what()).find("\"clock.dP00\""), std::string::npos);
    EXPECT_NE(std::string(nested.what()).find("\"clock.dP0\""), std::string::npos);

    const auto top = failure(R"({"experiment": "traversal-time", "dP00": 1})");
    EXPECT_NE(std::string(top.what()).find("\"clock.dP0\""), std::string::npos);

    const auto section = failure(R"({"experiment": "traversal-time", "larmor": {"j": 1}})");
    EXPECT_EQ(section.code(), Errc::configuration);

    const auto experiment = failure(R"({"experiment": "travesal-time"})");
    EXPECT_NE(std::string(experiment.what()).find("\"traversal-time\""), std::string::npos);
}

TEST(ParseConfig, TypeErrors)
{
    EXPECT_EQ(failure(R"({"experiment": "dwell", "numerics": {"dt": "fast"}})").code(), Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "dwell", "grid": 3})").code(), Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "dwell", "grid": {"n_points": 1000}})").code(), Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "dwell", "grid": {"n_points": 2048.5}})").code(), Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "traversal-time", "numerics": {"method": "euler"}})").code(),
              Errc::configuration);
    EXPECT_EQ(failure(R"({"seed": 3})").code(), Errc::configuration);
    EXPECT_EQ(failure(R"([1, 2])").code(), Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "ensemble-bound", "ensemble": {"sigma_p": -1}})").code(),
              Errc::configuration);
    EXPECT_EQ(failure(R"({"experiment": "ensemble-bound", "ensemble": {"n_samples": 100}})").code(),
              Errc::configuration);
}

TEST(ParseConfig, CrossFieldErrorsNameBothFields)
{
    auto check = [](const std::string& text, const std::string& a, const std::string& b) {
        const auto e = failure(text);
        EXPECT_EQ(e.code(), Errc::validation) << e.what();
        EXPECT_NE(std::string(e.what()).find(a), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find(b), std::string::npos) << e.what();
    };
    check(R"({"experiment": "traversal-time", "region": {"x1": 0, "x2": 70}})", "region.x2", "grid.x_max");
    check(R"({"experiment": "traversal-time", "region": {"x1": 3, "x2": 1}})", "region.x1", "region.x2");
    check(R"({"experiment": "traversal-time", "packet": {"x0": -2}})", "packet.x0", "region.x1");
    check(R"({"experiment": "dwell", "packet": {"x0": -60}})", "grid.x_min", "packet.x0");
    check(R"({"experiment": "traversal-distance", "distance": {"t1": 1.5, "t2": 0.5}})", "distance.t1",
          "distance.t2");
    check(R"({"experiment": "traversal-distance", "distance": {"t2": 3}})", "distance.t2", "numerics.t_total");
    check(R"({"experiment": "traversal-time", "clock": {"n_sectors": 33}})", "clock.n_sectors", "clock.q_max");
    check(R"({"experiment": "dwell", "numerics": {"dt": 6}})", "numerics.dt", "numerics.t_total");
    check(R"({"experiment": "violation-search", "violation": {"sigma_eps": 0.1, "delta_T_values": [0.1]}})",
          "violation.sigma_eps", "violation.delta_T_values");
}

TEST(ParseConfig, EveryExperimentHasValidDefaults)
{
    for (auto name : kExperimentNames) {
        const auto s = parse(std::string(R"({"experiment": ")") + std::string(name) + "\"}");
        EXPECT_EQ(to_string(s.experiment), name);
        EXPECT_FALSE(s.output_directory.empty());
    }
    const auto a = parse(R"({"experiment": "accuracy-sweep"})");
    EXPECT_EQ(a.method, SectorMethod::stationary);
    EXPECT_TRUE(a.clock.dP0_values.empty());
    const auto e = parse(R"({"experiment": "ensemble-bound"})");
    EXPECT_TRUE(e.ensemble.small_eps());
    EXPECT_EQ(e.n_samples, 1000000u);
}

TEST(ParseConfig, ReadsFiles)
{
    const auto dir = std::filesystem::temp_directory_path() / "ttclock_scenario_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ok.json") << R"({"experiment": "larmor", "larmor": {"j": 2}})";
    std::ofstream(dir / "bad.json") << R"({"experiment": )";
    EXPECT_DOUBLE_EQ(parse_config((dir / "ok.json").string()).larmor_j, 2.0);
    auto code = [](const std::string& path) {
        try {
            parse_config(path);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::quadrature;
    };
    EXPECT_EQ(code((dir / "bad.json").string()), Errc::configuration);
    EXPECT_EQ(code((dir / "missing.json").string()), Errc::configuration);
    std::filesystem::remove_all(dir);
}

TEST(SweepAxis, Resolution)
{
    const auto s = parse(R"({"experiment": "traversal-time"})");
    EXPECT_EQ(resolve_axis(s.resolved, "dP0"), "clock.dP0");
    EXPECT_EQ(resolve_axis(s.resolved, "clock.dP0"), "clock.dP0");
    EXPECT_EQ(resolve_axis(s.resolved, "x2"), "region.x2");
    EXPECT_THROW(resolve_axis(s.resolved, "mass.x"), Error);
    EXPECT_THROW(resolve_axis(s.resolved, "method"), Error);
    EXPECT_THROW(resolve_axis(s.resolved, "seed"), Error);
    EXPECT_THROW(resolve_axis(s.resolved, "clock"), Error);
    const auto v = parse(R"({"experiment": "violation-search"})");
    EXPECT_EQ(resolve_axis(v.resolved, "sigma_eps"), "violation.sigma_eps");
}

TEST(SweepAxis, WithValue)
{
    const auto s = parse(R"({"experiment": "traversal-time"})");
    const auto doc = with_value(s.resolved, "clock.dP0", 0.25);
    EXPECT_DOUBLE_EQ(scenario_from_json(doc).clock.dP0, 0.25);
    EXPECT_EQ(s.resolved["clock"]["dP0"], 1.0);
    EXPECT_EQ(scenario_from_json(with_value(s.resolved, "grid.n_points", 4096)).grid.n_points, 4096u);
    EXPECT_THROW(with_value(s.resolved, "grid.n_points", 4096.5), Error);
}
