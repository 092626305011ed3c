#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttclock/ttclock.hpp"

using namespace ttclock;

namespace {

std::vector<double> parse_values(const std::string& list)
{
    std::vector<double> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw Error(Errc::configuration, "sweep value \"" + item + "\" is not a number");
        }
        require(item.find_first_not_of(" \t", used) == std::string::npos, Errc::configuration,
                "sweep value \"" + item + "\" is not a number");
        out.push_back(v);
    }
    require(!out.empty(), Errc::configuration, "--values lists no values");
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Model traversal-time clocks: pointer and Larmor clocks, traversal distance, dwell time and "
                 "ensemble inaccuracy bounds."};
    app.require_subcommand(1);

    std::string config, out, axis, values;
    auto* run = app.add_subcommand("run", "Run one scenario and write report.json plus CSV tables");
    run->add_option("config", config, "Scenario JSON file")->required();
    run->add_option("--out", out, "Output directory (default: output.directory of the config)");

    auto* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one numeric field");
    sweep->add_option("config", config, "Scenario JSON file")->required();
    sweep->add_option("--axis", axis, "Field to vary: dotted path or unique field name")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--out", out, "Output directory (default: output.directory of the config)");

    auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults expanded");
    validate->add_option("config", config, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(Errc::configuration);
    }

    std::optional<Scenario> scenario;
    try {
        scenario = parse_config(config);
        if (*validate) {
            std::cout << scenario->resolved.dump(2) << "\n";
            return 0;
        }
        const unsigned workers = default_workers();
        const std::string dir = out.empty() ? scenario->output_directory : out;
        const RunReport report = *sweep ? run_sweep(*scenario, axis, parse_values(values), workers)
                                        : run_scenario(*scenario, workers);
        write_report(report, dir);
        std::cout << "wrote " << dir << "/report.json\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "ttclock: " << e.what() << "\n";
        // numerical and regime failures still leave a report behind
        if (scenario && !*validate && exit_code(e.code()) >= 4) {
            try {
                write_report(failure_report(*scenario, e), out.empty() ? scenario->output_directory : out);
            } catch (const Error&) {
            }
        }
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "ttclock: " << e.what() << "\n";
        return 1;
    }
}
