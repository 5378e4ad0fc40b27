// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace simbf
{
    void StackConfig::validate() const
    {
        if (num_layers < 1)
            throw std::invalid_argument("num_layers must be at least 1");
        if (atoms_x < 1 || atoms_z < 1)
            throw std::invalid_argument("atoms_x and atoms_z must be at least 1");
        if (active_atoms < 0 || active_atoms > atoms_x * atoms_z)
            throw std::invalid_argument("active_atoms must lie in [0, atoms_x * atoms_z]");
        if (!(total_thickness > 0.0))
            throw std::invalid_argument("total_thickness must be positive");
        if (!(atom_area > 0.0))
            throw std::invalid_argument("atom_area must be positive");
        if (!(atom_spacing > 0.0))
            throw std::invalid_argument("atom_spacing must be positive");
        if (num_antennas < 1)
            throw std::invalid_argument("num_antennas must be at least 1");
        if (num_antennas > 1 && !(antenna_spacing > 0.0))
            throw std::invalid_argument("antenna_spacing must be positive");
    }

    Vec3 SimGeometry::layer_center(int plane) const
    {
        return origin + axis() * (double(plane) * layer_gap);
    }

    SimGeometry build_stack_geometry(const StackConfig &config, const Vec3 &origin, int axis_sign)
    {
        config.validate();
        if (axis_sign != 1 && axis_sign != -1)
            throw std::invalid_argument("axis_sign must be +1 or -1");

        SimGeometry g;
        g.origin = origin;
        g.axis_sign = axis_sign;
        g.layer_gap = config.layer_gap();
        g.atom_spacing = config.atom_spacing;
        g.atom_area = config.atom_area;

        const int n_atoms = config.num_atoms();
        g.grid.reserve(n_atoms);
        for (int m = 0; m < n_atoms; ++m)
            g.grid.emplace_back(m / config.atoms_z, m % config.atoms_z);

        // In-plane offsets, centered on the populated atoms
        Eigen::Matrix3Xd offsets(3, n_atoms);
        for (int m = 0; m < n_atoms; ++m)
        {
            const auto [mx, mz] = g.grid[m];
            offsets.col(m) = Vec3(mx * config.atom_spacing, 0.0, mz * config.atom_spacing);
        }
        const Vec3 mean = offsets.rowwise().mean();
        offsets.colwise() -= mean;

        const Vec3 axis(0.0, double(axis_sign), 0.0);
        g.planes.resize(config.num_layers + 1);

        auto &ant = g.planes[0];
        ant.resize(3, config.num_antennas);
        const double ant_center = 0.5 * (config.num_antennas - 1) * config.antenna_spacing;
        for (int s = 0; s < config.num_antennas; ++s)
            ant.col(s) = origin + Vec3(s * config.antenna_spacing - ant_center, 0.0, 0.0);

        for (int l = 1; l <= config.num_layers; ++l)
            g.planes[l] = offsets.colwise() + (origin + axis * (l * g.layer_gap));

        return g;
    }

    double inter_layer_distance(const SimGeometry &geometry, int plane_from, int element_from, int plane_to, int element_to)
    {
        const int n_planes = int(geometry.planes.size());
        if (plane_from < 0 || plane_from >= n_planes || plane_to < 0 || plane_to >= n_planes)
            throw std::out_of_range("plane index out of range");
        if (element_from < 0 || element_from >= geometry.planes[plane_from].cols() ||
            element_to < 0 || element_to >= geometry.planes[plane_to].cols())
            throw std::out_of_range("element index out of range");
        return (geometry.planes[plane_from].col(element_from) - geometry.planes[plane_to].col(element_to)).norm();
    }
}
