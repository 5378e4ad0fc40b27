// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/system.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace simbf
{
    std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
    {
        // splitmix64 finalizer over a combination of both inputs
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static void check_stack(const StackConfig &s, const std::string &prefix, std::vector<std::string> &out)
    {
        auto need = [&](bool ok, const char *field, const char *msg)
        {
            if (!ok)
                out.push_back(prefix + field + ": " + msg);
        };
        need(s.num_layers >= 1, "num_layers", "must be at least 1");
        need(s.atoms_x >= 1 && s.atoms_z >= 1, "atoms", "grid sizes must be at least 1");
        need(s.active_atoms >= 0 && s.active_atoms <= s.atoms_x * s.atoms_z, "active_atoms", "must lie in [0, atoms_x * atoms_z]");
        need(s.atom_spacing > 0.0, "atom_spacing_m", "must be positive");
        need(s.total_thickness > 0.0, "thickness_m", "must be positive");
        need(s.atom_area > 0.0, "atom_area_m2", "must be positive");
        need(s.num_antennas >= 1, "num_antennas", "must be at least 1");
        need(s.antenna_spacing > 0.0, "antenna_spacing_m", "must be positive");
    }

    std::vector<std::string> SystemConfig::validate(const std::string &prefix) const
    {
        std::vector<std::string> out;
        check_stack(tx, prefix + "tx.", out);
        check_stack(rx, prefix + "rx.", out);
        if (tx.num_antennas != rx.num_antennas)
            out.push_back(prefix + "rx.num_antennas: must equal tx.num_antennas (one antenna per stream)");
        if (tx.num_antennas > tx.num_atoms() || rx.num_antennas > rx.num_atoms())
            out.push_back(prefix + "num_antennas: streams cannot exceed the atoms per layer");
        if (!(center_frequency > 0.0))
            out.push_back(prefix + "center_frequency_hz: must be positive");
        if (!(link_distance > 0.0))
            out.push_back(prefix + "link_distance_m: must be positive");
        if (num_scatterers < 1)
            out.push_back(prefix + "num_scatterers: must be at least 1");
        if (!(volume.near_fraction > 0.0 && volume.near_fraction < volume.far_fraction && volume.far_fraction < 1.0))
            out.push_back(prefix + "scatterer_volume: fractions must satisfy 0 < near < far < 1");
        if (!(volume.half_width > 0.0))
            out.push_back(prefix + "scatterer_volume.half_width_m: must be positive");
        return out;
    }

    StackConfig default_stack(int layers, int atoms_x, int atoms_z, int antennas, double center_frequency, double thickness)
    {
        const double lambda = wavelength(center_frequency);
        StackConfig s;
        s.num_layers = layers;
        s.atoms_x = atoms_x;
        s.atoms_z = atoms_z;
        s.atom_spacing = 0.5 * lambda;
        s.total_thickness = thickness;
        s.atom_area = 0.25 * lambda * lambda;
        s.num_antennas = antennas;
        s.antenna_spacing = 0.5 * lambda;
        return s;
    }

    SimGeometry tx_geometry(const SystemConfig &config)
    {
        return build_stack_geometry(config.tx, Vec3::Zero(), +1);
    }

    SimGeometry rx_geometry(const SystemConfig &config)
    {
        return build_stack_geometry(config.rx, Vec3(0.0, config.link_distance, 0.0), -1);
    }

    std::vector<Scatterer> draw_channel(const SystemConfig &config, std::uint64_t channel_seed)
    {
        std::mt19937_64 rng(channel_seed);
        const PathGainModel gains{wavelength(config.center_frequency), db_to_linear(config.antenna_gain_dbi),
                                  db_to_linear(config.system_loss_db)};
        return draw_scatterers(rng, config.num_scatterers, Vec3::Zero(), Vec3(0.0, config.link_distance, 0.0),
                               config.volume, gains);
    }

    std::vector<SubcarrierContext> build_contexts(const SimGeometry &tx, const SimGeometry &rx,
                                                  const std::vector<Scatterer> &scatterers, const BandSpec &band,
                                                  int num_streams, double reference_delay)
    {
        band.validate();
        std::vector<SubcarrierContext> out;
        out.reserve(band.num_subcarriers);
        for (double f : band.frequencies())
            out.push_back(build_subcarrier_context(tx, rx, scatterers, f, num_streams, reference_delay));
        return out;
    }

    SimSystem build_system(const SystemConfig &config, const BandSpec &band, std::uint64_t channel_seed)
    {
        const auto problems = config.validate();
        if (!problems.empty())
            throw std::invalid_argument("build_system: " + problems.front());
        SimSystem sys;
        sys.tx = tx_geometry(config);
        sys.rx = rx_geometry(config);
        sys.scatterers = draw_channel(config, channel_seed);
        if (config.timing_sync)
        {
            sys.reference_delay = sys.scatterers.front().delay;
            for (const auto &s : sys.scatterers)
                sys.reference_delay = std::min(sys.reference_delay, s.delay);
        }
        sys.band = band;
        sys.contexts = build_contexts(sys.tx, sys.rx, sys.scatterers, band, config.num_streams(), sys.reference_delay);
        return sys;
    }

    SimSystem rebuild_band(const SimSystem &system, const BandSpec &band, int num_streams)
    {
        SimSystem sys;
        sys.tx = system.tx;
        sys.rx = system.rx;
        sys.scatterers = system.scatterers;
        sys.reference_delay = system.reference_delay;
        sys.band = band;
        sys.contexts = build_contexts(sys.tx, sys.rx, sys.scatterers, band, num_streams, sys.reference_delay);
        return sys;
    }
}
