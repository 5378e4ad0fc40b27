// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_BAND_HPP
#define SIMBF_BAND_HPP

#include <stdexcept>
#include <vector>

namespace simbf
{
    // Subcarrier grid f_i = f0 + (i - (N_e + 1)/2) * df, i = 1..N_e, df = B / N_e
    struct BandSpec
    {
        double center_frequency = 28e9; // f0 [Hz]
        double bandwidth = 0.0;         // B [Hz]
        int num_subcarriers = 1;        // N_e

        double spacing() const { return bandwidth / num_subcarriers; }

        double frequency(int i) const // i is 1-based
        {
            return center_frequency + (i - 0.5 * (num_subcarriers + 1)) * spacing();
        }

        std::vector<double> frequencies() const
        {
            std::vector<double> f(num_subcarriers);
            for (int i = 1; i <= num_subcarriers; ++i)
                f[i - 1] = frequency(i);
            return f;
        }

        void validate() const
        {
            if (num_subcarriers < 1)
                throw std::invalid_argument("BandSpec: num_subcarriers must be at least 1");
            if (!(bandwidth > 0.0))
                throw std::invalid_argument("BandSpec: bandwidth must be positive");
            if (!(center_frequency > 0.0) || !(center_frequency - 0.5 * bandwidth > 0.0))
                throw std::invalid_argument("BandSpec: band must lie at positive frequencies");
        }
    };
}

#endif
