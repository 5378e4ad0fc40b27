// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/bandwidth.hpp"

#include "simbf/objective.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace simbf
{
    double omega(const PhaseState &state, std::span<const SubcarrierContext> contexts, OmegaNormalization normalization)
    {
        if (contexts.empty())
            throw std::invalid_argument("omega: no subcarriers");
        if (normalization == OmegaNormalization::per_subcarrier)
            return nmse(state, contexts);
        const double denom = contexts.back().target_norm2();
        if (!(denom > 0.0))
            throw std::domain_error("omega: zero target on the last subcarrier");
        double sum = 0.0;
        for (double e : subcarrier_errors(state, contexts))
            sum += e;
        return sum / denom;
    }

    PhaseState initial_state(const SimSystem &system, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        PhaseState state = PhaseState::random(system.tx.num_layers(), system.tx.num_atoms(), system.rx.num_layers(),
                                              system.rx.num_atoms(), rng);
        try
        {
            state.alpha = optimal_alpha(state, system.contexts);
        }
        catch (const DegenerateCascade &)
        {
            state.alpha = 1.0;
        }
        return state;
    }

    FitResult normalized_fit(const SimSystem &system, const SolverSettings &settings, const FitOptions &options)
    {
        system.band.validate();
        PhaseState init;
        if (options.warm_start)
        {
            init = *options.warm_start;
            try
            {
                init.alpha = optimal_alpha(init, system.contexts);
            }
            catch (const DegenerateCascade &)
            {
            }
        }
        else
            init = initial_state(system, derive_seed(options.seed, 0));

        SolverSettings s = settings;
        s.seed = derive_seed(options.seed, 1);
        auto [state, report] = bcd_pccp(system.contexts, s, init);

        FitResult out;
        out.omega = omega(state, system.contexts, options.normalization);
        out.budget_exhausted = report.reason == ConvergenceReason::budget_exhausted;
        out.state = std::move(state);
        out.report = std::move(report);
        return out;
    }

    FitResult normalized_fit(const SimSystem &system, const BandSpec &band, const SolverSettings &settings,
                             const FitOptions &options)
    {
        band.validate();
        return normalized_fit(rebuild_band(system, band, system.tx.num_antennas()), settings, options);
    }

    void BisectionResult::write_csv(std::ostream &os) const
    {
        os << "index,kind,bandwidth_hz,omega,converged,passed,seed\n";
        const auto old_precision = os.precision(17);
        for (const auto &p : probes)
            os << p.index << ',' << (p.endpoint ? "endpoint" : "midpoint") << ',' << p.bandwidth << ',' << p.omega << ','
               << int(p.converged) << ',' << int(p.passed) << ',' << p.seed << '\n';
        os.precision(old_precision);
    }

    int bisection_probe_bound(double low, double high, double tolerance)
    {
        if (!(tolerance > 0.0) || !(high > low))
            throw std::invalid_argument("bisection_probe_bound: need low < high and tolerance > 0");
        return std::max(0, int(std::ceil(std::log2((high - low) / tolerance))));
    }

    BisectionResult bisect_effective_bandwidth(const BisectionSettings &settings, const OmegaFunction &omega_of)
    {
        if (!omega_of)
            throw std::invalid_argument("bisect_effective_bandwidth: no Omega function");
        if (!(settings.low > 0.0))
            throw std::invalid_argument("bisect_effective_bandwidth: B_low must be positive");
        const int n = bisection_probe_bound(settings.low, settings.high, settings.tolerance);

        BisectionResult out;
        auto probe = [&](double bandwidth, bool endpoint)
        {
            ProbeRecord rec;
            rec.index = int(out.probes.size());
            rec.endpoint = endpoint;
            rec.bandwidth = bandwidth;
            rec.seed = derive_seed(settings.seed, std::uint64_t(rec.index));
            const ProbeResult r = omega_of(bandwidth, rec.seed);
            rec.omega = r.omega;
            rec.converged = r.converged;
            rec.passed = r.omega <= settings.threshold;
            out.probes.push_back(rec);
            (endpoint ? out.endpoint_probes : out.midpoint_probes)++;
            return rec.passed;
        };

        double lo = settings.low, hi = settings.high;
        bool any_pass = false, any_fail = false;
        for (int k = 0; k < n; ++k)
        {
            const double mid = 0.5 * (lo + hi);
            if (probe(mid, false))
            {
                lo = mid;
                any_pass = true;
            }
            else
            {
                hi = mid;
                any_fail = true;
            }
        }

        if (!any_fail && probe(settings.high, true))
        {
            lo = settings.high;
            any_pass = true;
        }
        if (!any_pass && !probe(settings.low, true))
            throw NoFeasibleBandwidth("bisect_effective_bandwidth: Omega exceeds the threshold at B_low");
        out.effective_bandwidth = lo;
        return out;
    }

    OmegaFunction optimizer_probe(const SimSystem &system, int num_subcarriers, const SolverSettings &settings,
                                  OmegaNormalization normalization, bool warm_start)
    {
        if (num_subcarriers < 1)
            throw std::invalid_argument("optimizer_probe: num_subcarriers must be at least 1");
        auto previous = std::make_shared<std::optional<PhaseState>>();
        return [system, num_subcarriers, settings, normalization, warm_start, previous](double bandwidth, std::uint64_t seed)
        {
            FitOptions options;
            options.normalization = normalization;
            options.seed = seed;
            if (warm_start)
                options.warm_start = *previous;
            const BandSpec band{system.band.center_frequency, bandwidth, num_subcarriers};
            FitResult fit = normalized_fit(system, band, settings, options);
            if (warm_start)
                *previous = fit.state;
            return ProbeResult{fit.omega, fit.report.reason == ConvergenceReason::converged};
        };
    }
}
