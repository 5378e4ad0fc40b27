// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/evaluation.hpp"

#include "simbf/objective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace simbf
{
    LinkBudget LinkBudget::from_db(double tx_power_dbm, double noise_power_dbm, double antenna_gain_dbi, double system_loss_db)
    {
        return {dbm_to_watt(tx_power_dbm), dbm_to_watt(noise_power_dbm), db_to_linear(antenna_gain_dbi),
                db_to_linear(system_loss_db)};
    }

    std::vector<std::string> LinkBudget::validate(const std::string &prefix) const
    {
        std::vector<std::string> out;
        auto need = [&](bool ok, const char *field)
        {
            if (!ok)
                out.push_back(prefix + field + ": must be positive");
        };
        need(tx_power > 0.0 && std::isfinite(tx_power), "tx_power");
        need(noise_power > 0.0 && std::isfinite(noise_power), "noise_power");
        need(antenna_gain > 0.0 && std::isfinite(antenna_gain), "antenna_gain");
        need(system_loss > 0.0 && std::isfinite(system_loss), "system_loss");
        return out;
    }

    WaterfillResult waterfill(std::span<const double> gains, double sigma2, double total_power)
    {
        if (!(total_power > 0.0))
            throw std::invalid_argument("waterfill: total power must be positive");
        if (!(sigma2 > 0.0))
            throw std::invalid_argument("waterfill: noise power must be positive");
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < gains.size(); ++k)
        {
            if (!(gains[k] >= 0.0) || !std::isfinite(gains[k]))
                throw std::invalid_argument("waterfill: gains must be finite and non-negative");
            if (gains[k] > 0.0)
                order.push_back(k);
        }
        if (order.empty())
            throw std::invalid_argument("waterfill: all gains are zero");
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

        // With the k strongest channels active the level is (P + sum sigma2/g) / k; the active set is the
        // largest k whose weakest member still lies below that level.
        double floor_sum = 0.0, level = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k)
        {
            const double floor_k = sigma2 / gains[order[k]];
            const double candidate = (total_power + floor_sum + floor_k) / double(k + 1);
            if (k > 0 && candidate <= floor_k)
                break;
            floor_sum += floor_k;
            level = candidate;
        }

        WaterfillResult out;
        out.level = level;
        out.powers.assign(gains.size(), 0.0);
        for (std::size_t k : order)
            out.powers[k] = std::max(0.0, level - sigma2 / gains[k]);
        return out;
    }

    double spectral_efficiency(const CMat &H, const RVec &target, const RVec &powers, double alpha, double sigma2,
                               SignalGain signal)
    {
        const Eigen::Index S = H.rows();
        if (H.cols() != S || target.size() != S || powers.size() != S)
            throw std::invalid_argument("spectral_efficiency: inconsistent shapes");
        if ((powers.array() < 0.0).any())
            throw std::invalid_argument("spectral_efficiency: negative power");
        if (!(sigma2 > 0.0))
            throw std::invalid_argument("spectral_efficiency: noise power must be positive");
        const double a2 = alpha * alpha;
        double eta = 0.0;
        for (Eigen::Index s = 0; s < S; ++s)
        {
            double interference = 0.0;
            for (Eigen::Index t = 0; t < S; ++t)
                if (t != s)
                    interference += powers[t] * a2 * std::norm(H(s, t));
            const double g = signal == SignalGain::target ? target[s] * target[s] : std::norm(H(s, s));
            eta += std::log2(1.0 + powers[s] * a2 * g / (interference + sigma2));
        }
        return eta;
    }

    double capacity(std::span<const double> eta, double spacing)
    {
        double c = 0.0;
        for (double e : eta)
            c += spacing * e;
        return c;
    }

    CapacityReport evaluate_capacity(const PhaseState &state, std::span<const SubcarrierContext> contexts,
                                     const BandSpec &band, const LinkBudget &link, SignalGain signal)
    {
        if (contexts.size() != std::size_t(band.num_subcarriers))
            throw std::invalid_argument("evaluate_capacity: band and contexts differ in subcarrier count");
        const std::size_t Ne = contexts.size();
        const Eigen::Index S = contexts.front().target().size();

        std::vector<double> gains;
        gains.reserve(Ne * S);
        for (const auto &ctx : contexts)
            for (Eigen::Index s = 0; s < S; ++s)
                gains.push_back(std::norm(state.alpha * ctx.target()[s]));
        const WaterfillResult wf = waterfill(gains, link.noise_power, link.tx_power);

        CapacityReport out;
        out.water_level = wf.level;
        out.nmse = subcarrier_nmse(state, contexts);
        for (double v : out.nmse)
            out.nmse_sum += v;
        for (std::size_t i = 0; i < Ne; ++i)
        {
            RVec p(S);
            for (Eigen::Index s = 0; s < S; ++s)
                p[s] = wf.powers[i * S + s];
            out.frequencies.push_back(contexts[i].frequency);
            out.powers.emplace_back(p.data(), p.data() + S);
            out.eta.push_back(spectral_efficiency(end_to_end(contexts[i], state), contexts[i].target(), p, state.alpha,
                                                  link.noise_power, signal));
        }
        out.capacity = capacity(out.eta, band.spacing());
        return out;
    }

    TrialSeeds trial_seeds(std::uint64_t trial_seed)
    {
        return {derive_seed(trial_seed, 0), derive_seed(trial_seed, 1)};
    }

    OptimizedRun run_multi_carrier(const SimSystem &system, const SolverSettings &settings, const LinkBudget &link,
                                   std::uint64_t fit_seed, SignalGain signal)
    {
        FitOptions options;
        options.seed = fit_seed;
        OptimizedRun run;
        run.fit = normalized_fit(system, settings, options);
        run.report = evaluate_capacity(run.fit.state, system.contexts, system.band, link, signal);
        return run;
    }

    OptimizedRun run_baseline_single_carrier(const SimSystem &system, const SolverSettings &settings,
                                             const LinkBudget &link, std::uint64_t fit_seed, SignalGain signal)
    {
        const BandSpec center{system.band.center_frequency, system.band.spacing(), 1};
        FitOptions options;
        options.seed = fit_seed;
        OptimizedRun run;
        run.fit = normalized_fit(system, center, settings, options);
        run.report = evaluate_capacity(run.fit.state, system.contexts, system.band, link, signal);
        return run;
    }

    std::pair<StackConfig, StackConfig> build_single_layer_baseline(const StackConfig &tx, const StackConfig &rx)
    {
        auto flatten = [](const StackConfig &in)
        {
            const int total = in.num_layers * in.num_atoms();
            if (total < 1)
                throw std::invalid_argument("build_single_layer_baseline: empty stack");
            int side = 1;
            while (side * side < total)
                ++side;
            StackConfig out = in;
            out.num_layers = 1;
            out.atoms_x = side;
            out.atoms_z = side;
            out.active_atoms = side * side == total ? 0 : total;
            out.atom_spacing = std::sqrt(double(in.atoms_x * in.atoms_z)) * in.atom_spacing / side;
            return out;
        };
        return {flatten(tx), flatten(rx)};
    }

    void parallel_for(int count, int workers, const std::function<void(int)> &fn)
    {
        if (count <= 0)
            return;
        workers = std::clamp(workers, 1, count);
        if (workers == 1)
        {
            for (int i = 0; i < count; ++i)
                fn(i);
            return;
        }
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]
                              {
                                  for (int i = next++; i < count; i = next++)
                                  {
                                      try
                                      {
                                          fn(i);
                                      }
                                      catch (...)
                                      {
                                          std::lock_guard lock(failure_mutex);
                                          if (!failure)
                                              failure = std::current_exception();
                                      }
                                  } });
        for (auto &t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    std::vector<TrialOutcome> run_trials(int num_trials, std::uint64_t master_seed, int workers, const TrialFunction &trial)
    {
        if (num_trials < 1)
            throw std::invalid_argument("run_trials: need at least one trial");
        std::vector<TrialOutcome> out(num_trials);
        parallel_for(num_trials, workers, [&](int i)
                     {
                         const std::uint64_t seed = derive_seed(master_seed, std::uint64_t(i));
                         try
                         {
                             out[i] = trial(i, seed);
                             out[i].ok = true;
                         }
                         catch (const std::exception &e)
                         {
                             out[i] = TrialOutcome{};
                             out[i].error = e.what();
                         }
                         out[i].index = i;
                         out[i].seed = seed; });
        return out;
    }

    MonteCarloSummary aggregate(std::span<const TrialOutcome> outcomes)
    {
        MonteCarloSummary s;
        s.trials = int(outcomes.size());
        std::vector<double> nmse, cap;
        for (const auto &o : outcomes)
        {
            if (!o.ok)
            {
                ++s.failed;
                continue;
            }
            nmse.push_back(o.nmse);
            cap.push_back(o.capacity);
        }
        auto stats = [](const std::vector<double> &v, double &mean, double &sd)
        {
            mean = sd = 0.0;
            if (v.empty())
                return;
            for (double x : v)
                mean += x;
            mean /= double(v.size());
            if (v.size() < 2)
                return;
            double ss = 0.0;
            for (double x : v)
                ss += (x - mean) * (x - mean);
            sd = std::sqrt(ss / double(v.size() - 1));
        };
        stats(nmse, s.nmse_mean, s.nmse_std);
        stats(cap, s.capacity_mean, s.capacity_std);
        return s;
    }
}
