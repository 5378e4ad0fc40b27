// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_BANDWIDTH_HPP
#define SIMBF_BANDWIDTH_HPP

#include "simbf/band.hpp"
#include "simbf/optimizer.hpp"
#include "simbf/system.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace simbf
{
    // Denominator of the normalized fitting error.
    //   per_subcarrier:  Omega = sum_i e_i / ||T_i||^2
    //   last_subcarrier: Omega = sum_i e_i / ||T_Ne||^2
    enum class OmegaNormalization
    {
        per_subcarrier,
        last_subcarrier
    };

    double omega(const PhaseState &state, std::span<const SubcarrierContext> contexts,
                 OmegaNormalization normalization = OmegaNormalization::per_subcarrier);

    struct FitOptions
    {
        OmegaNormalization normalization = OmegaNormalization::per_subcarrier;
        std::uint64_t seed = 1;               // initial phases and optimizer restarts
        std::optional<PhaseState> warm_start; // replaces the random initial phases when set
    };

    struct FitResult
    {
        double omega = 0.0;
        bool budget_exhausted = false;
        PhaseState state;
        OptimizationReport report;
    };

    // Random initial phases for a system, alpha set to its optimum (1 if the cascade is degenerate)
    PhaseState initial_state(const SimSystem &system, std::uint64_t seed);

    // Optimizes the phases of 'system' for its band and reports Omega
    FitResult normalized_fit(const SimSystem &system, const SolverSettings &settings, const FitOptions &options = {});

    // Same channel realization re-evaluated on 'band'
    FitResult normalized_fit(const SimSystem &system, const BandSpec &band, const SolverSettings &settings,
                             const FitOptions &options = {});

    struct ProbeResult
    {
        double omega = 0.0;
        bool converged = true;
    };

    // Omega at a bandwidth; the seed is fixed per probe index
    using OmegaFunction = std::function<ProbeResult(double bandwidth, std::uint64_t probe_seed)>;

    struct ProbeRecord
    {
        int index = 0;     // 0-based, in evaluation order
        bool endpoint = false;
        double bandwidth = 0.0;
        double omega = 0.0;
        bool converged = true;
        bool passed = false;
        std::uint64_t seed = 0;
    };

    struct BisectionResult
    {
        double effective_bandwidth = 0.0;
        std::vector<ProbeRecord> probes;
        int midpoint_probes = 0;
        int endpoint_probes = 0;

        // index,kind,bandwidth_hz,omega,converged,passed,seed
        void write_csv(std::ostream &os) const;
    };

    struct BisectionSettings
    {
        double threshold = 0.0065; // epsilon
        double low = 0.0;          // B_low [Hz]
        double high = 0.0;         // B_high [Hz]
        double tolerance = 1e5;    // [Hz]
        std::uint64_t seed = 1;
    };

    // Raised when Omega exceeds the threshold at B_low
    struct NoFeasibleBandwidth : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Number of midpoint probes: ceil(log2((high - low) / tolerance)), at least 0
    int bisection_probe_bound(double low, double high, double tolerance);

    // Largest probed bandwidth with Omega <= threshold. Exactly bisection_probe_bound midpoints are
    // evaluated. An endpoint is evaluated only when every midpoint lands on the same side of the
    // threshold: B_high when all pass (returned if it passes too), B_low when all fail.
    BisectionResult bisect_effective_bandwidth(const BisectionSettings &settings, const OmegaFunction &omega_of);

    // Omega function backed by the optimizer on one channel realization with a fixed subcarrier count.
    // With warm_start the previous probe's phases seed the next probe.
    OmegaFunction optimizer_probe(const SimSystem &system, int num_subcarriers, const SolverSettings &settings,
                                  OmegaNormalization normalization = OmegaNormalization::per_subcarrier,
                                  bool warm_start = false);
}

#endif
