#include "chmc/errors.hpp"
#include "chmc/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

// exit-code contract: 0 ok, 2 config error, 3 numeric failure, 4 assertion failure
int run_scenario(const std::string& name, const std::string& config_path, const std::string& out,
                 int jobs) {
    try {
        chmc::RunConfig cfg = chmc::load_config(config_path);
        if (cfg.scenario != chmc::scenario_from_string(name))
            throw chmc::config_error("config scenario \"" +
                                     chmc::scenario_to_string(cfg.scenario) +
                                     "\" does not match subcommand \"" + name + "\"");
        if (!out.empty()) cfg.output_dir = out;
        if (jobs > 0) cfg.jobs = jobs;
        chmc::RunManifest man = chmc::run(cfg);
        std::cout << "wrote " << man.files.size() << " files to " << cfg.output_dir << " ("
                  << man.wall_clock_sec << " s)\n";
        return 0;
    } catch (const chmc::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const chmc::assertion_error& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constant harmonic mean curvature foliation toolkit"};
    app.require_subcommand(1);

    const std::vector<std::string> names = {"curvature-check", "flow",    "spectral",
                                            "foliation",       "centers", "uniqueness-probe"};
    struct Args {
        std::string config;
        std::string out;
        int jobs = 0;
    };
    std::map<std::string, Args> args;
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, "run the " + name + " scenario");
        auto& a = args[name];
        sub->add_option("--config", a.config, "JSON configuration file")->required();
        sub->add_option("--out", a.out, "output directory (overrides config)");
        sub->add_option("--jobs", a.jobs, "worker pool size for independent runs");
    }

    std::string cmp_a, cmp_b;
    double cmp_tol = 0.0;
    auto* cmp = app.add_subcommand("compare", "field-wise diff of two run summaries");
    cmp->add_option("manifest_a", cmp_a, "first manifest.json")->required();
    cmp->add_option("manifest_b", cmp_b, "second manifest.json")->required();
    cmp->add_option("--rel-tol", cmp_tol, "maximum tolerated relative difference");

    CLI11_PARSE(app, argc, argv);

    for (const auto& name : names)
        if (app.got_subcommand(name))
            return run_scenario(name, args[name].config, args[name].out, args[name].jobs);

    if (app.got_subcommand("compare")) {
        try {
            chmc::CompareResult res = chmc::compare_runs(cmp_a, cmp_b);
            for (const auto& line : res.lines) std::cout << line << "\n";
            std::cout << "max relative difference: " << res.max_rel_diff << "\n";
            return res.max_rel_diff <= cmp_tol ? 0 : 4;
        } catch (const chmc::config_error& e) {
            std::cerr << "usage error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "numeric failure: " << e.what() << "\n";
            return 3;
        }
    }
    return 2;
}
