// SPDX-License-Identifier: Apache-2.0
//
// simbf command-line runner
//
//   simbf run      --config exp.json [--out dir] [--overwrite] [--workers n] [--trials n]
//   simbf validate --config exp.json
//   simbf seeds    --config exp.json [--trials n]
//
// Exit codes: 0 success, 2 config error, 3 runtime failure.

#include "simbf/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace
{
    constexpr int kOk = 0;
    constexpr int kConfigError = 2;
    constexpr int kRuntimeError = 3;

    int report_config_error(const simbf::ConfigError &e)
    {
        for (const auto &d : e.diagnostics)
            std::cerr << "error: " << d << '\n';
        return kConfigError;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"simbf - stacked intelligent metasurface beamforming experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool overwrite = false;
    int workers = 0;
    int trials = 0;

    auto *run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run->add_flag("--overwrite", overwrite, "Replace existing results in the output directory");
    run->add_option("--workers", workers, "Worker threads (overrides workers)")->check(CLI::PositiveNumber);
    run->add_option("--trials", trials, "Monte-Carlo trials (overrides trials)")->check(CLI::PositiveNumber);

    auto *validate = app.add_subcommand("validate", "Check a config file and list every problem");
    validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto *seeds = app.add_subcommand("seeds", "Print the derived per-trial seeds");
    seeds->add_option("--config", config_path, "Experiment config (JSON)")->required();
    seeds->add_option("--trials", trials, "Monte-Carlo trials (overrides trials)")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try
    {
        const auto doc = simbf::read_config_file(config_path);

        if (*validate)
        {
            const auto diags = simbf::validate_config(doc);
            for (const auto &d : diags)
                std::cout << d << '\n';
            if (!diags.empty())
                return kConfigError;
            std::cout << config_path << ": ok\n";
            return kOk;
        }

        simbf::ExperimentConfig cfg = simbf::parse_config(doc);

        if (*seeds)
        {
            if (trials > 0)
                cfg.trials = trials;
            std::cout << "trial,seed,channel_seed,fit_seed\n";
            for (const auto &row : simbf::experiment_seeds(cfg))
                std::cout << row.trial << ',' << row.seed << ',' << row.derived.channel << ',' << row.derived.fit << '\n';
            return kOk;
        }

        simbf::RunOptions options;
        if (!out_dir.empty())
            options.output_dir = out_dir;
        if (workers > 0)
            options.workers = workers;
        if (trials > 0)
            options.trials = trials;
        options.overwrite = overwrite;

        const auto summary = simbf::run_experiment(cfg, options);
        std::cout << "wrote";
        for (const auto &f : summary.files)
            std::cout << ' ' << (summary.output_dir / f).string();
        std::cout << "\n" << summary.jobs - summary.failed_jobs << "/" << summary.jobs << " jobs succeeded in "
                  << summary.wall_clock_s << " s\n";
        return summary.failed_jobs == summary.jobs ? kRuntimeError : kOk;
    }
    catch (const simbf::ConfigError &e)
    {
        return report_config_error(e);
    }
    catch (const simbf::OutputExists &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
