// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "harness/experiments.hpp"
#include "harness/results.hpp"
#include "harness/scenario.hpp"

namespace {

int run_command(const std::string& scenario_path, const std::string& out_dir,
                const std::string& experiment, bool have_seed, std::uint64_t seed) {
    isac::harness::LoadReport report;
    isac::harness::Scenario sc;
    try {
        sc = isac::harness::load_scenario(scenario_path, &report);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "scenario validation failed: %s\n", e.what());
        return 2;
    }
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!experiment.empty()) sc.experiment = experiment;
    if (have_seed) sc.seed = seed;

    try {
        const auto bundle = isac::harness::run_experiment(sc);
        const auto emitted = isac::harness::emit(bundle, out_dir);
        std::printf("experiment %s: %zu artifacts\n", sc.experiment.c_str(),
                    emitted.paths.size());
        for (const auto& p : emitted.paths) std::printf("  %s\n", p.c_str());
        std::printf("  %s\n", emitted.manifest_path.c_str());
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

int validate_command(const std::string& scenario_path) {
    isac::harness::LoadReport report;
    try {
        const auto sc = isac::harness::load_scenario(scenario_path, &report);
        for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        std::printf("scenario OK: experiment=%s seed=%llu n_t=%d n_f=%d users=%zu points=%zu\n",
                    sc.experiment.c_str(), static_cast<unsigned long long>(sc.seed), sc.cfg.n_t,
                    sc.cfg.n_f, sc.geom.users.size(), sc.scene.points.size());
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "scenario validation failed: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OAM ISAC anti-jamming simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string experiment;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run an experiment and emit result files");
    run->add_option("--scenario", scenario_path, "scenario JSON path")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--experiment", experiment,
                    "experiment id (overrides the scenario file)");
    auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides the scenario file)");

    auto* validate = app.add_subcommand("validate", "validate a scenario file");
    validate->add_option("--scenario", scenario_path, "scenario JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return run_command(scenario_path, out_dir, experiment, seed_opt->count() > 0, seed);
    return validate_command(scenario_path);
}
