// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_EXPERIMENT_HPP
#define SIMBF_EXPERIMENT_HPP

#include "simbf/bandwidth.hpp"
#include "simbf/evaluation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace simbf
{
    enum class ExperimentKind
    {
        fit_error_vs_bandwidth,
        capacity_vs_subcarriers,
        capacity_vs_layers,
        capacity_vs_atoms,
        convergence_sweep,
        baseline_comparison
    };

    const char *to_string(ExperimentKind kind);
    std::optional<ExperimentKind> parse_experiment_kind(const std::string &name);

    struct BisectionConfig
    {
        double threshold = 0.0065;
        double low = 1e6;  // [Hz]
        double high = 40e6; // [Hz]
        double tolerance = 1e5; // [Hz]
        bool warm_start = false;
    };

    struct ExperimentConfig
    {
        ExperimentKind kind = ExperimentKind::baseline_comparison;
        SystemConfig system;
        BandSpec band;
        LinkBudget link;
        SolverSettings solver;
        SignalGain signal = SignalGain::target;
        OmegaNormalization normalization = OmegaNormalization::per_subcarrier;

        // Sweep grids; only the one belonging to 'kind' is used
        std::vector<double> bandwidths;     // [Hz]
        std::vector<int> subcarriers;       // N_e
        std::vector<int> layers;            // L = K
        std::vector<int> atoms_per_side;    // M = N = n^2
        std::vector<double> penalties;      // rho = varrho
        std::vector<double> mus;
        std::optional<BisectionConfig> bisection;

        int trials = 1;
        std::uint64_t master_seed = 1;
        int workers = 1;
        std::string output_dir = "results";

        nlohmann::ordered_json source; // parsed config as written
    };

    // Raised with every diagnostic when a config does not validate
    struct ConfigError : std::runtime_error
    {
        std::vector<std::string> diagnostics;
        explicit ConfigError(std::vector<std::string> diags);
    };

    // All problems of a config document, each prefixed with its field path. Empty iff parse_config succeeds.
    std::vector<std::string> validate_config(const nlohmann::ordered_json &doc);

    ExperimentConfig parse_config(const nlohmann::ordered_json &doc);

    // Reads and parses a config file. Unreadable files and JSON syntax errors raise ConfigError too.
    nlohmann::ordered_json read_config_file(const std::filesystem::path &path);

    struct RunOptions
    {
        std::optional<std::filesystem::path> output_dir; // overrides the config
        std::optional<int> workers;
        std::optional<int> trials;
        bool overwrite = false;
    };

    struct RunSummary
    {
        std::filesystem::path output_dir;
        std::vector<std::string> files; // written artifacts, relative to output_dir
        int jobs = 0;
        int failed_jobs = 0;
        double wall_clock_s = 0.0;
    };

    // Raised when the output directory already holds results and overwrite is off
    struct OutputExists : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Runs the experiment and writes its artifacts. Trial failures are recorded in the artifacts;
    // other failures leave a manifest with status "failed" and rethrow.
    RunSummary run_experiment(ExperimentConfig config, const RunOptions &options = {});

    // Per-trial seeds of a config: (trial seed, channel seed, fit seed)
    struct SeedRow
    {
        int trial = 0;
        std::uint64_t seed = 0;
        TrialSeeds derived;
    };
    std::vector<SeedRow> experiment_seeds(const ExperimentConfig &config);
}

#endif
