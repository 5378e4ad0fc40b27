// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_CHANNEL_HPP
#define SIMBF_CHANNEL_HPP

#include "simbf/geometry.hpp"
#include "simbf/propagation.hpp"
#include "simbf/types.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace simbf
{
    enum class PathType
    {
        los,
        nlos
    };

    // One propagation path. Angles follow the UPA convention: elevation measured from +z in [0, pi),
    // azimuth measured from the stack boresight (+-y) towards +x in [-pi/2, pi/2].
    struct Scatterer
    {
        Vec3 position = Vec3::Zero(); // Interaction point [m] (LoS: the RX reference point)
        cd gain = 0.0;                // g_p, frequency-flat
        double delay = 0.0;           // tau_p [s]
        double tx_elevation = 0.0;
        double tx_azimuth = 0.0;
        double rx_elevation = 0.0;
        double rx_azimuth = 0.0;
        PathType type = PathType::nlos;
    };

    // Box between TX and RX in which NLoS scatterers are placed uniformly
    struct ScattererVolume
    {
        double near_fraction = 0.1; // Start of the box along the TX-RX line, fraction of the distance
        double far_fraction = 0.9;  // End of the box
        double half_width = 25.0;   // Transverse half-width [m]
    };

    // Parameters of the geometric path-gain law
    struct PathGainModel
    {
        double wavelength = 0.0;       // lambda_0 [m]
        double antenna_gain_lin = 1.0; // Linear antenna gain
        double system_loss_lin = 1.0;  // Linear system loss
    };

    // Direction angles (elevation, azimuth) of 'direction' seen from a stack with boresight along +-y
    std::pair<double, double> direction_angles(const Vec3 &direction);

    // Draws one LoS path plus (count - 1) NLoS scatterers uniform in the volume.
    // LoS gain: lambda/(4 pi d) sqrt(G/L); NLoS gain: zeta_p lambda/(4 pi (d_tp + d_pr)) with
    // zeta_p ~ CN(0, s2), s2 chosen so that the NLoS power sum equals the LoS power.
    std::vector<Scatterer> draw_scatterers(std::mt19937_64 &rng, int count, const Vec3 &tx_position, const Vec3 &rx_position,
                                           const ScattererVolume &volume, const PathGainModel &gain_model);

    // Electrical angles (psi_x, psi_z) of a path at one frequency for a grid with pitch 'spacing'
    std::pair<double, double> electrical_angles(const Scatterer &scatterer, double frequency, double spacing, Side side);

    // alpha_x (x) alpha_z with [alpha_x]_mx = e^{j mx psi_x} (0-based); length grid_x * grid_z
    CVec steering_vector(double psi_x, double psi_z, int grid_x, int grid_z);

    // Same law evaluated on an explicit list of (m_x, m_z) grid coordinates (truncated grids)
    CVec steering_vector(double psi_x, double psi_z, const std::vector<std::pair<int, int>> &grid);

    // G(f) = sum_p g_p e^{-j 2 pi f tau_p} alpha_r alpha_t^H, size N x M
    // A receiver synchronized to the first arrival sees delays relative to 'reference_delay'.
    CMat channel_matrix(const std::vector<Scatterer> &scatterers, double frequency, const SimGeometry &tx, const SimGeometry &rx,
                        double reference_delay = 0.0);

    // SVD factors of G and the S x S diagonal target
    struct SvdTargets
    {
        CMat E;                 // Left singular vectors (thin)
        RVec singular_values;   // Non-increasing
        CMat F;                 // Right singular vectors (thin)
        RVec target;            // [Lambda]_{1:S,1:S} diagonal
        CMat precoder() const;  // [F]_{:,1:S}
        CMat combiner() const;  // [E]_{:,1:S}^H
    };
    SvdTargets svd_targets(const CMat &G, int num_streams);

    // Everything the optimizer needs about one subcarrier
    struct SubcarrierContext
    {
        double frequency = 0.0;
        double wavenumber = 0.0;
        LayerTransfers transfers;
        CMat G;
        SvdTargets svd;

        const RVec &target() const { return svd.target; }
        CMat target_matrix() const { return svd.target.cast<cd>().asDiagonal(); }
        double target_norm2() const { return svd.target.squaredNorm(); }
    };

    SubcarrierContext build_subcarrier_context(const SimGeometry &tx, const SimGeometry &rx,
                                               const std::vector<Scatterer> &scatterers, double frequency, int num_streams,
                                               double reference_delay = 0.0);

    // Scatterer records as JSON text (position, gain, delay, angles, type)
    std::string scatterers_to_json(const std::vector<Scatterer> &scatterers);
    std::vector<Scatterer> scatterers_from_json(const std::string &text);
}

#endif
