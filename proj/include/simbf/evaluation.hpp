// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_EVALUATION_HPP
#define SIMBF_EVALUATION_HPP

#include "simbf/bandwidth.hpp"
#include "simbf/optimizer.hpp"
#include "simbf/system.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simbf
{
    // Linear-scale link constants
    struct LinkBudget
    {
        double tx_power = 0.1;      // P_t [W]
        double noise_power = 1e-14; // sigma_N^2 [W]
        double antenna_gain = 1.0;  // linear
        double system_loss = 1.0;   // linear

        static LinkBudget from_db(double tx_power_dbm, double noise_power_dbm, double antenna_gain_dbi, double system_loss_db);
        std::vector<std::string> validate(const std::string &prefix = "") const;
    };

    struct WaterfillResult
    {
        std::vector<double> powers;
        double level = 0.0; // tau_p
    };

    // p_k = max(0, level - sigma2 / g_k) with sum p_k = total_power. The level is found exactly by
    // sorting the gains and solving the piecewise-linear budget equation.
    WaterfillResult waterfill(std::span<const double> gains, double sigma2, double total_power);

    // Which diagonal quantity enters the useful-signal term of the spectral efficiency
    enum class SignalGain
    {
        target,  // [Lambda_i]_s
        achieved // |[H_i]_{s,s}|
    };

    // eta = sum_s log2(1 + p_s |alpha g_s|^2 / (sum_{t != s} p_t |alpha [H]_{s,t}|^2 + sigma2)) [bit/s/Hz]
    double spectral_efficiency(const CMat &H, const RVec &target, const RVec &powers, double alpha, double sigma2,
                               SignalGain signal = SignalGain::target);

    // C = df * sum eta_i [bit/s]
    double capacity(std::span<const double> eta, double spacing);

    struct CapacityReport
    {
        std::vector<double> frequencies;         // f_i [Hz]
        std::vector<double> nmse;                // per-subcarrier normalized error
        std::vector<double> eta;                 // [bit/s/Hz]
        std::vector<std::vector<double>> powers; // [i][s] [W]
        double water_level = 0.0;
        double capacity = 0.0; // [bit/s]
        double nmse_sum = 0.0; // S for this realization
        std::uint64_t seed = 0;
    };

    // Water-fills the band jointly over all (subcarrier, stream) pairs with gains |alpha lambda|^2 and
    // evaluates per-subcarrier NMSE and spectral efficiency
    CapacityReport evaluate_capacity(const PhaseState &state, std::span<const SubcarrierContext> contexts,
                                     const BandSpec &band, const LinkBudget &link, SignalGain signal = SignalGain::target);

    // Seeds of one trial: channel draw, initial phases (and optimizer restarts)
    struct TrialSeeds
    {
        std::uint64_t channel = 0;
        std::uint64_t fit = 0;
    };
    TrialSeeds trial_seeds(std::uint64_t trial_seed);

    struct OptimizedRun
    {
        FitResult fit;
        CapacityReport report;
    };

    // Phases optimized jointly over every subcarrier of the system's band
    OptimizedRun run_multi_carrier(const SimSystem &system, const SolverSettings &settings, const LinkBudget &link,
                                   std::uint64_t fit_seed, SignalGain signal = SignalGain::target);

    // Phases and alpha optimized at f0 only, then frozen and evaluated over the system's band
    OptimizedRun run_baseline_single_carrier(const SimSystem &system, const SolverSettings &settings,
                                             const LinkBudget &link, std::uint64_t fit_seed,
                                             SignalGain signal = SignalGain::target);

    // Single-layer stacks with the same total atom count on the same aperture: a ceil(sqrt(total))^2 grid
    // at pitch sqrt(M) r / ceil(sqrt(total)) (5 lambda0 / ceil(sqrt(M L)) for M = 100, r = lambda0 / 2),
    // truncated to 'total' atoms. Everything else is inherited.
    std::pair<StackConfig, StackConfig> build_single_layer_baseline(const StackConfig &tx, const StackConfig &rx);

    // Outcome of one Monte-Carlo trial
    struct TrialOutcome
    {
        int index = 0;
        std::uint64_t seed = 0;
        bool ok = false;
        std::string error;
        double nmse = 0.0;
        double capacity = 0.0;
    };

    struct MonteCarloSummary
    {
        int trials = 0;
        int failed = 0;
        double nmse_mean = 0.0;
        double nmse_std = 0.0;
        double capacity_mean = 0.0;
        double capacity_std = 0.0;
    };

    // Trial i uses derive_seed(master_seed, i). Exceptions are recorded in the outcome.
    using TrialFunction = std::function<TrialOutcome(int index, std::uint64_t seed)>;

    // Runs trials on 'workers' threads; results are returned in trial order
    std::vector<TrialOutcome> run_trials(int num_trials, std::uint64_t master_seed, int workers, const TrialFunction &trial);

    // Mean and sample standard deviation over the successful trials, summed in trial order
    MonteCarloSummary aggregate(std::span<const TrialOutcome> outcomes);

    // Calls fn(0..count-1) on up to 'workers' threads. fn must only write to per-index slots.
    void parallel_for(int count, int workers, const std::function<void(int)> &fn);
}

#endif
