// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/optimizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace simbf
{
    std::vector<std::string> SolverSettings::validate(const std::string &prefix) const
    {
        std::vector<std::string> out;
        auto need = [&](bool ok, const char *field, const char *msg)
        {
            if (!ok)
                out.push_back(prefix + field + ": " + msg);
        };
        need(max_outer >= 1, "max_outer", "must be at least 1");
        need(max_inner_tx >= 1, "max_inner_tx", "must be at least 1");
        need(max_inner_rx >= 1, "max_inner_rx", "must be at least 1");
        need(rho_init >= 0.0, "rho_init", "must be non-negative");
        need(varrho_init >= 0.0, "varrho_init", "must be non-negative");
        need(rho_max >= rho_init, "rho_max", "must be at least rho_init");
        need(varrho_max >= varrho_init, "varrho_max", "must be at least varrho_init");
        need(mu > 1.0, "mu", "mu must exceed 1");
        need(eps_objective > 0.0, "eps_objective", "must be positive");
        need(eps_iterate > 0.0, "eps_iterate", "must be positive");
        need(eps_slack > 0.0, "eps_slack", "must be positive");
        need(nu > 0.0, "nu", "must be positive");
        need(restart_budget >= 0, "restart_budget", "must be non-negative");
        need(subproblem_tol > 0.0, "subproblem_tol", "must be positive");
        need(subproblem_max_iterations >= 1, "subproblem_max_iterations", "must be at least 1");
        return out;
    }

    double escalated_penalty(double init, double mu, double max, int escalations)
    {
        return std::min(init * std::pow(mu, escalations), max);
    }

    const char *to_string(ConvergenceReason reason)
    {
        switch (reason)
        {
        case ConvergenceReason::converged:
            return "converged";
        case ConvergenceReason::iteration_cap:
            return "iteration_cap";
        case ConvergenceReason::budget_exhausted:
            return "budget_exhausted";
        }
        return "unknown";
    }

    void OptimizationReport::write_jsonl(std::ostream &os) const
    {
        for (const auto &r : iterations)
        {
            nlohmann::ordered_json j;
            j["sweep"] = r.sweep;
            j["side"] = r.side == Side::tx ? "tx" : "rx";
            j["layer"] = r.layer;
            j["inner"] = r.inner;
            j["penalty"] = r.penalty;
            j["objective_before"] = r.objective_before;
            j["objective_after"] = r.objective_after;
            j["gamma"] = r.gamma;
            j["slack_l1"] = r.slack_l1;
            j["iterate_change"] = r.iterate_change;
            j["alpha"] = r.alpha;
            j["solver_iterations"] = r.solver_iterations;
            j["solver_converged"] = r.solver_converged;
            os << j.dump() << '\n';
        }
    }

    BlockDecision check_block_convergence(std::span<const BlockStep> history, const SolverSettings &settings, int cap)
    {
        if (history.empty())
            throw std::invalid_argument("check_block_convergence: empty history");
        const BlockStep &last = history.back();
        const double scale = std::max(std::abs(last.gamma_before), std::numeric_limits<double>::min());
        const bool flat = std::abs(last.gamma_before - last.gamma_after) <= settings.eps_objective * scale;
        if (flat && last.iterate_change <= settings.eps_iterate && last.slack_l1 <= settings.eps_slack)
            return BlockDecision::converged;
        if (int(history.size()) >= cap)
            return BlockDecision::restart;
        return BlockDecision::proceed;
    }

    bool check_outer_convergence(std::span<const double> objective_history, double nu)
    {
        if (objective_history.size() < 2)
            return false;
        const double prev = objective_history[objective_history.size() - 2];
        const double cur = objective_history.back();
        return std::abs(cur - prev) <= nu * std::abs(prev);
    }

    namespace
    {
        CVec unit_phasors(const RVec &theta)
        {
            CVec x(theta.size());
            for (Eigen::Index m = 0; m < theta.size(); ++m)
                x[m] = std::polar(1.0, theta[m]);
            return x;
        }

        RVec phases_of(const CVec &x)
        {
            RVec theta(x.size());
            for (Eigen::Index m = 0; m < x.size(); ++m)
                theta[m] = x[m] == cd(0.0, 0.0) ? 0.0 : std::arg(x[m]);
            return theta;
        }

        RVec wrapped_difference(const RVec &a, const RVec &b)
        {
            RVec d(a.size());
            for (Eigen::Index m = 0; m < a.size(); ++m)
                d[m] = std::remainder(a[m] - b[m], 2.0 * kPi);
            return d;
        }

        RVec random_phases(Eigen::Index n, std::mt19937_64 &rng)
        {
            std::uniform_real_distribution<double> dist(0.0, 2.0 * kPi);
            RVec theta(n);
            for (Eigen::Index m = 0; m < n; ++m)
                theta[m] = dist(rng);
            return theta;
        }

        // Projection to unit modulus that never increases Gamma: falls back along the phase arc
        RVec safeguarded_projection(const QuadraticForm &form, double alpha, const RVec &theta_old, double gamma_old,
                                    const CVec &x_solution, double tol)
        {
            const RVec theta_new = phases_of(x_solution);
            if (form.evaluate(unit_phasors(theta_new), alpha) <= gamma_old + tol)
                return theta_new;
            const RVec delta = wrapped_difference(theta_new, theta_old);
            double step = 0.5;
            for (int k = 0; k < 40; ++k, step *= 0.5)
            {
                const RVec candidate = theta_old + step * delta;
                if (form.evaluate(unit_phasors(candidate), alpha) <= gamma_old)
                    return candidate;
            }
            return theta_old;
        }

        double refreshed_alpha(const PhaseState &state, std::span<const SubcarrierContext> contexts)
        {
            try
            {
                return optimal_alpha(state, contexts);
            }
            catch (const DegenerateCascade &)
            {
                return state.alpha;
            }
        }
    }

    std::pair<PhaseState, OptimizationReport> bcd_pccp(std::span<const SubcarrierContext> contexts,
                                                       const SolverSettings &settings, const PhaseState &init)
    {
        const auto problems = settings.validate();
        if (!problems.empty())
            throw std::invalid_argument("bcd_pccp: " + problems.front());
        if (contexts.empty())
            throw std::invalid_argument("bcd_pccp: no subcarriers");

        const auto t_start = std::chrono::steady_clock::now();
        const double scale = total_target_energy(contexts);
        if (!(scale > 0.0))
            throw std::domain_error("bcd_pccp: zero target energy");

        OptimizationReport report;
        report.gamma_scale = scale;
        std::mt19937_64 rng(settings.seed);

        PhaseState state = init;
        const int L = int(state.theta.size());
        const int K = int(state.zeta.size());

        double gamma = fitting_error(state, contexts);
        report.penalized_objective.push_back(gamma / scale);
        report.gamma.push_back(gamma);
        report.alpha.push_back(state.alpha);

        PhaseState best = state;
        double best_gamma = gamma;

        // Pre-projection slack of the step that produced each layer's current phases
        std::vector<double> tx_slack(L, 0.0), rx_slack(K, 0.0);
        double best_slack = 0.0;
        auto max_slack = [&]
        {
            double m = 0.0;
            for (double v : tx_slack)
                m = std::max(m, v);
            for (double v : rx_slack)
                m = std::max(m, v);
            return m;
        };

        bool exhausted = false;
        bool converged = false;

        for (int sweep = 1; sweep <= settings.max_outer && !exhausted && !converged; ++sweep)
        {
            report.sweeps = sweep;
            bool all_blocks_converged = true;
            double penalty_terms = 0.0;

            for (int block = 0; block < L + K && !exhausted; ++block)
            {
                const Side side = block < L ? Side::tx : Side::rx;
                const int layer = side == Side::tx ? block + 1 : block - L + 1;
                RVec &theta = side == Side::tx ? state.theta[layer - 1] : state.zeta[layer - 1];
                double &layer_slack = side == Side::tx ? tx_slack[layer - 1] : rx_slack[layer - 1];
                const double p_init = side == Side::tx ? settings.rho_init : settings.varrho_init;
                const double p_max = side == Side::tx ? settings.rho_max : settings.varrho_max;
                const int cap = side == Side::tx ? settings.max_inner_tx : settings.max_inner_rx;

                // The layer's form depends only on the other layers and is fixed for the whole inner loop.
                // Penalties act on the form normalized by the total target energy.
                const QuadraticForm raw = side == Side::tx ? quadratic_form_tx(layer, state, contexts)
                                                           : quadratic_form_rx(layer, state, contexts);
                const double curvature = scale;
                const QuadraticForm form = raw.scaled(1.0 / curvature);

                // Best candidate of this block over the initial run and its random restarts
                RVec block_theta = theta;
                double block_gamma = form.evaluate(unit_phasors(theta), state.alpha);
                double block_slack = layer_slack, block_penalty = 0.0;
                bool block_restarted = false;

                // A block that hits its cap gets one random restart; the better of the two runs is kept
                BlockDecision decision = BlockDecision::restart;
                for (int attempt = 0; attempt < 2 && decision == BlockDecision::restart; ++attempt)
                {
                    const bool first = attempt == 0;
                    if (!first)
                    {
                        if (report.restarts >= settings.restart_budget)
                        {
                            exhausted = true;
                            break;
                        }
                        ++report.restarts;
                        theta = random_phases(theta.size(), rng);
                    }

                    std::vector<BlockStep> history;
                    double last_penalty = 0.0, last_slack = 0.0;
                    decision = BlockDecision::proceed;
                    while (decision == BlockDecision::proceed)
                    {
                        const int step = int(history.size());
                        const double penalty = escalated_penalty(p_init, settings.mu, p_max, step);
                        const CVec x_prev = unit_phasors(theta);
                        const double g_before = form.evaluate(x_prev, state.alpha);
                        const auto sub = build_pccp_subproblem(form, x_prev, penalty, state.alpha);
                        const auto sol = solve_subproblem(sub, settings.subproblem_tol, settings.subproblem_max_iterations);

                        const RVec theta_new = safeguarded_projection(form, state.alpha, theta, g_before, sol.x, settings.subproblem_tol);
                        const double g_after = form.evaluate(unit_phasors(theta_new), state.alpha);
                        const double slack_l1 = sol.slack.sum();
                        const double change = wrapped_difference(theta_new, theta).norm();
                        theta = theta_new;

                        IterationRecord rec;
                        rec.sweep = sweep;
                        rec.side = side;
                        rec.layer = layer;
                        rec.inner = step + 1;
                        rec.penalty = penalty;
                        rec.objective_before = g_before;
                        rec.objective_after = sol.objective;
                        rec.gamma = g_after * curvature / scale;
                        rec.slack_l1 = slack_l1;
                        rec.iterate_change = change;
                        rec.alpha = state.alpha;
                        rec.solver_iterations = sol.iterations;
                        rec.solver_converged = sol.converged;
                        report.iterations.push_back(rec);

                        history.push_back({g_before, g_after, change, slack_l1});
                        last_penalty = penalty;
                        last_slack = slack_l1;
                        decision = sol.converged ? check_block_convergence(history, settings, cap) : BlockDecision::restart;
                    }

                    const double g_final = form.evaluate(unit_phasors(theta), state.alpha);
                    if (first || g_final < block_gamma)
                    {
                        block_theta = theta;
                        block_gamma = g_final;
                        block_slack = last_slack;
                        block_penalty = last_penalty;
                        block_restarted = !first;
                    }
                    if (decision == BlockDecision::restart)
                        all_blocks_converged = false;
                }

                theta = block_theta;
                layer_slack = block_slack;
                if (block_restarted)
                    state.alpha = refreshed_alpha(state, contexts);
                penalty_terms += block_penalty * block_slack * curvature / scale;

                const double g = fitting_error(state, contexts);
                if (g < best_gamma)
                {
                    best_gamma = g;
                    best = state;
                    best_slack = max_slack();
                }
            }
            if (exhausted)
                break;

            state.alpha = refreshed_alpha(state, contexts);
            gamma = fitting_error(state, contexts);
            report.penalized_objective.push_back(gamma / scale + penalty_terms);
            report.gamma.push_back(gamma);
            report.alpha.push_back(state.alpha);
            report.final_slack_l1 = max_slack();
            if (gamma < best_gamma)
            {
                best_gamma = gamma;
                best = state;
                best_slack = report.final_slack_l1;
            }

            converged = all_blocks_converged && check_outer_convergence(report.penalized_objective, settings.nu);
        }

        if (converged)
            report.reason = ConvergenceReason::converged;
        else
        {
            report.reason = exhausted ? ConvergenceReason::budget_exhausted : ConvergenceReason::iteration_cap;
            if (best_gamma < gamma || exhausted)
            {
                state = best;
                state.alpha = refreshed_alpha(state, contexts);
                report.final_slack_l1 = best_slack;
            }
        }
        report.final_gamma = fitting_error(state, contexts);
        report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return {state, report};
    }
}
