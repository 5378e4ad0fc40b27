// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_GEOMETRY_HPP
#define SIMBF_GEOMETRY_HPP

#include "simbf/types.hpp"

#include <utility>
#include <vector>

namespace simbf
{
    // Layout parameters of one metasurface stack and its antenna array.
    struct StackConfig
    {
        int num_layers = 1;           // L (TX) or K (RX)
        int atoms_x = 1;              // Grid size along x
        int atoms_z = 1;              // Grid size along z
        int active_atoms = 0;         // Atoms actually populated in index order, 0 = full grid
        double atom_spacing = 0.0;    // Grid pitch [m]
        double total_thickness = 0.0; // Stack thickness [m]
        double atom_area = 0.0;       // Area of one meta-atom [m^2]
        int num_antennas = 1;         // Number of antennas (= data streams)
        double antenna_spacing = 0.0; // Antenna pitch [m]

        int num_atoms() const { return active_atoms > 0 ? active_atoms : atoms_x * atoms_z; }
        double layer_gap() const { return total_thickness / num_layers; }

        // Throws std::invalid_argument on the first violated invariant
        void validate() const;
    };

    // 3D positions of every element of a stack. Plane 0 is the antenna plane,
    // planes 1..num_layers are the metasurface layers. The propagation axis is y.
    struct SimGeometry
    {
        Vec3 origin = Vec3::Zero();
        int axis_sign = 1;                         // +1: layers at +y from the origin, -1: at -y
        double layer_gap = 0.0;                    // d = D / L
        double atom_spacing = 0.0;                 // Grid pitch
        double atom_area = 0.0;                    // Area of one meta-atom
        std::vector<std::pair<int, int>> grid;     // (m_x, m_z), 0-based, per atom index
        std::vector<Eigen::Matrix3Xd> planes;      // planes[0] = antennas, planes[l] = layer l

        int num_layers() const { return int(planes.size()) - 1; }
        int num_atoms() const { return int(grid.size()); }
        int num_antennas() const { return int(planes.front().cols()); }
        Vec3 position(int plane, int element) const { return planes.at(plane).col(element); }
        Vec3 layer_center(int plane) const;
        Vec3 axis() const { return Vec3(0.0, double(axis_sign), 0.0); }
    };

    // Builds a stack: layer l lies at signed offset l*d from the origin along y, atoms form a
    // centered grid, antennas a centered line along x in the origin plane.
    // Atom index m maps to (m_x, m_z) as m = m_x * atoms_z + m_z.
    SimGeometry build_stack_geometry(const StackConfig &config, const Vec3 &origin, int axis_sign);

    // Euclidean distance between two elements on adjacent planes
    double inter_layer_distance(const SimGeometry &geometry, int plane_from, int element_from, int plane_to, int element_to);
}

#endif
