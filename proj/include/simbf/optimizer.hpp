// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_OPTIMIZER_HPP
#define SIMBF_OPTIMIZER_HPP

#include "simbf/channel.hpp"
#include "simbf/objective.hpp"
#include "simbf/propagation.hpp"
#include "simbf/subproblem.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simbf
{
    struct SolverSettings
    {
        int max_outer = 50;           // tau_max, full TX + RX sweeps
        int max_inner_tx = 30;        // tau_theta_max
        int max_inner_rx = 30;        // tau_zeta_max
        double rho_init = 0.6;        // TX slack penalty
        double varrho_init = 0.6;     // RX slack penalty
        double rho_max = 100.0;
        double varrho_max = 100.0;
        double mu = 1.3;              // penalty growth ratio
        double eps_objective = 1e-3;  // relative objective change per block
        double eps_iterate = 1e-5;    // phase displacement per block [rad]
        double eps_slack = 1e-5;      // slack l1 norm per block
        double nu = 1e-6;             // relative change of F between sweeps
        int restart_budget = 1000;    // random layer reinitializations
        std::uint64_t seed = 1;
        double subproblem_tol = 1e-8;
        int subproblem_max_iterations = 200;

        // Human-readable violations, empty when valid. 'prefix' is prepended to field names.
        std::vector<std::string> validate(const std::string &prefix = "") const;
    };

    // Penalty after t escalations: min(init * mu^t, max)
    double escalated_penalty(double init, double mu, double max, int escalations);

    // One PCCP inner step of one layer
    struct IterationRecord
    {
        int sweep = 0;                // outer iteration, 1-based
        Side side = Side::tx;
        int layer = 0;                // 1-based
        int inner = 0;                // 1-based within the block
        double penalty = 0.0;         // rho or varrho used for this step
        double objective_before = 0.0; // penalized objective at (x_prev, s = 0)
        double objective_after = 0.0;  // penalized objective at the subproblem solution
        double gamma = 0.0;           // normalized Gamma after projection
        double slack_l1 = 0.0;        // pre-projection slack l1 norm
        double iterate_change = 0.0;  // wrapped ||delta theta||_2
        double alpha = 0.0;
        int solver_iterations = 0;
        bool solver_converged = false;
    };

    enum class ConvergenceReason
    {
        converged,
        iteration_cap,
        budget_exhausted
    };
    const char *to_string(ConvergenceReason reason);

    struct OptimizationReport
    {
        std::vector<IterationRecord> iterations;
        std::vector<double> penalized_objective; // F after each sweep (index 0: initial point)
        std::vector<double> gamma;               // raw Gamma after each sweep (index 0: initial point)
        std::vector<double> alpha;               // alpha after each sweep (index 0: initial point)
        double gamma_scale = 1.0;                // sum ||T_i||^2; normalized values are divided by it
        double final_gamma = 0.0;                // raw Gamma of the returned state
        double final_slack_l1 = 0.0;             // largest last-step slack l1 over the blocks of the final sweep
        ConvergenceReason reason = ConvergenceReason::iteration_cap;
        int sweeps = 0;
        int restarts = 0;
        double wall_clock_s = 0.0;

        // One JSON object per inner iteration
        void write_jsonl(std::ostream &os) const;
    };

    // Inner-loop history entry used by the block convergence test
    struct BlockStep
    {
        double gamma_before = 0.0;
        double gamma_after = 0.0;
        double iterate_change = 0.0;
        double slack_l1 = 0.0;
    };

    enum class BlockDecision
    {
        proceed,
        converged,
        restart
    };

    // Per-block tests on the last step; 'restart' once the history reaches 'cap' without converging
    BlockDecision check_block_convergence(std::span<const BlockStep> history, const SolverSettings &settings, int cap);

    // Global test on the sweep history of F: |F_t - F_{t-1}| <= nu |F_{t-1}|
    bool check_outer_convergence(std::span<const double> objective_history, double nu);

    // Block-coordinate descent with penalized convex-concave inner loops over all layers of both stacks
    std::pair<PhaseState, OptimizationReport> bcd_pccp(std::span<const SubcarrierContext> contexts,
                                                       const SolverSettings &settings, const PhaseState &init);
}

#endif
