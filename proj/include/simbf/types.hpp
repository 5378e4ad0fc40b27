// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_TYPES_HPP
#define SIMBF_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace simbf
{
    using cd = std::complex<double>;
    using CMat = Eigen::MatrixXcd;
    using CVec = Eigen::VectorXcd;
    using RVec = Eigen::VectorXd;
    using Vec3 = Eigen::Vector3d;

    inline constexpr double kSpeedOfLight = 299792458.0; // [m/s]
    inline constexpr double kPi = std::numbers::pi;

    inline double wavelength(double frequency) { return kSpeedOfLight / frequency; }
    inline double wavenumber(double frequency) { return 2.0 * kPi * frequency / kSpeedOfLight; }

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

    // Which transceiver stack an object belongs to
    enum class Side
    {
        tx,
        rx
    };
}

#endif
