// SPDX-License-Identifier: Apache-2.0
//
// Small random instances shared by the unit suites

#ifndef SIMBF_TEST_SUPPORT_HPP
#define SIMBF_TEST_SUPPORT_HPP

#include "simbf/bandwidth.hpp"
#include "simbf/objective.hpp"
#include "simbf/system.hpp"

#include <random>

namespace simbf::test
{
    inline SystemConfig small_config(int layers, int atoms_x, int atoms_z, int streams, int scatterers = 12)
    {
        SystemConfig cfg;
        cfg.tx = default_stack(layers, atoms_x, atoms_z, streams, cfg.center_frequency);
        cfg.rx = cfg.tx;
        cfg.num_scatterers = scatterers;
        return cfg;
    }

    inline SimSystem small_system(std::uint64_t seed, int layers = 2, int atoms_x = 2, int atoms_z = 2, int streams = 2,
                                  int subcarriers = 2, double bandwidth = 10e6)
    {
        return build_system(small_config(layers, atoms_x, atoms_z, streams), BandSpec{28e9, bandwidth, subcarriers}, seed);
    }

    inline CVec random_unit(int n, std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        CVec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = std::polar(1.0, u(rng));
        return x;
    }

    inline CMat random_matrix(int r, int c, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        CMat m(r, c);
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < r; ++i)
                m(i, j) = cd(n(rng), n(rng));
        return m;
    }

    inline double rel_diff(double a, double b)
    {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    }
}

#endif
