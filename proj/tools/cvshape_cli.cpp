#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvshape/experiment.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Shape four-mode Gaussian cluster states and check the nullifier criteria"};
    std::string scenario;
    std::string config_path;
    std::string construction;
    std::string output;
    std::string format;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    double squeezing = 0.0;
    bool analytic_only = false;
    bool lossless = false;
    bool timing = false;

    app.add_option("--scenario", scenario, "remove-edge | remove-inner | shorten-wire | ring-route-check | custom");
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--construction", construction, "canonical | compiled | preset-paper");
    auto *trials_opt = app.add_option("--trials", trials, "Monte Carlo trials (0 = analytic only)");
    auto *seed_opt = app.add_option("--seed", seed, "generator seed; overrides " + std::string(cvshape::kSeedEnvVar));
    auto *threads_opt = app.add_option("--threads", threads, "worker threads (0 = all cores)");
    auto *db_opt = app.add_option("--squeezing-db", squeezing, "squeezing of every input in dB")->check(CLI::NonNegativeNumber);
    app.add_flag("--analytic-only", analytic_only, "skip Monte Carlo sampling");
    app.add_flag("--lossless", lossless, "disable every loss stage, including calibration");
    app.add_flag("--timing", timing, "include wall time in the report");
    app.add_option("--output", output, "report path, - for stdout");
    app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    CLI11_PARSE(app, argc, argv);

    try {
        cvshape::ExperimentConfig config = config_path.empty() ? cvshape::ExperimentConfig{}
                                                               : cvshape::load_config(config_path);
        if (const char *env = std::getenv(cvshape::kSeedEnvVar)) config.seed = std::stoull(env);
        if (!scenario.empty()) config.scenario = cvshape::scenario_from_string(scenario);
        if (!construction.empty()) config.construction = cvshape::construction_from_string(construction);
        if (*trials_opt) config.trials = trials;
        if (*seed_opt) config.seed = seed;
        if (*threads_opt) config.threads = threads;
        if (*db_opt) {
            config.default_db = squeezing;
            config.squeezing_db.clear();
        }
        if (analytic_only) config.trials = 0;
        if (lossless) config.lossless = true;
        if (timing) config.record_wall_time = true;
        if (!output.empty()) config.output = output;
        if (!format.empty()) config.format = cvshape::format_from_string(format);

        const auto report = cvshape::run(config);
        cvshape::emit(report, config.format, config.output);
        return report.all_pass() ? 0 : 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
