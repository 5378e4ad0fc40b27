// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_SYSTEM_HPP
#define SIMBF_SYSTEM_HPP

#include "simbf/band.hpp"
#include "simbf/channel.hpp"
#include "simbf/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simbf
{
    // Stateless 64-bit mix of (seed, index), used to derive independent stream seeds
    std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

    // Physical setup of one link: both stacks, propagation environment and RF constants
    struct SystemConfig
    {
        StackConfig tx;
        StackConfig rx;
        double center_frequency = 28e9; // f0 [Hz]
        double link_distance = 250.0;   // TX-RX distance [m]
        int num_scatterers = 200;       // Including the LoS path
        ScattererVolume volume;
        double antenna_gain_dbi = 9.0;
        double system_loss_db = 3.0;
        bool timing_sync = true;        // Delays measured from the first arrival

        int num_streams() const { return tx.num_antennas; }

        // Human-readable violations, empty when valid
        std::vector<std::string> validate(const std::string &prefix = "") const;
    };

    // Stack following the usual layout: half-wavelength pitch, quarter-wavelength-squared atoms
    StackConfig default_stack(int layers, int atoms_x, int atoms_z, int antennas, double center_frequency,
                              double thickness = 0.05);

    // A system realization: geometry, one channel draw and the subcarrier contexts of a band
    struct SimSystem
    {
        SimGeometry tx;
        SimGeometry rx;
        std::vector<Scatterer> scatterers;
        double reference_delay = 0.0; // Subtracted from every path delay [s]
        BandSpec band;
        std::vector<SubcarrierContext> contexts;
    };

    SimGeometry tx_geometry(const SystemConfig &config);
    SimGeometry rx_geometry(const SystemConfig &config);

    // Scatterers drawn from 'channel_seed'
    std::vector<Scatterer> draw_channel(const SystemConfig &config, std::uint64_t channel_seed);

    // Contexts of every subcarrier of 'band' for a given channel realization
    std::vector<SubcarrierContext> build_contexts(const SimGeometry &tx, const SimGeometry &rx,
                                                  const std::vector<Scatterer> &scatterers, const BandSpec &band,
                                                  int num_streams, double reference_delay = 0.0);

    SimSystem build_system(const SystemConfig &config, const BandSpec &band, std::uint64_t channel_seed);

    // Same geometry and scatterers, different band
    SimSystem rebuild_band(const SimSystem &system, const BandSpec &band, int num_streams);
}

#endif
