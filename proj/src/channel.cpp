// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/channel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <stdexcept>

namespace simbf
{
    std::pair<double, double> direction_angles(const Vec3 &direction)
    {
        const Vec3 d = direction.normalized();
        double elevation = std::acos(std::clamp(d.z(), -1.0, 1.0));
        if (elevation >= kPi) // keep inside [0, pi)
            elevation = std::nextafter(kPi, 0.0);
        const double azimuth = std::atan2(d.x(), std::abs(d.y()));
        return {elevation, azimuth};
    }

    std::vector<Scatterer> draw_scatterers(std::mt19937_64 &rng, int count, const Vec3 &tx_position, const Vec3 &rx_position,
                                           const ScattererVolume &volume, const PathGainModel &gain_model)
    {
        if (count < 1)
            throw std::invalid_argument("draw_scatterers: count must be at least 1");
        const Vec3 line = rx_position - tx_position;
        const double distance = line.norm();
        if (!(distance > 0.0))
            throw std::invalid_argument("draw_scatterers: TX and RX positions coincide");
        if (!(volume.near_fraction > 0.0 && volume.near_fraction < volume.far_fraction && volume.far_fraction < 1.0))
            throw std::invalid_argument("draw_scatterers: volume must satisfy 0 < near_fraction < far_fraction < 1");
        if (!(volume.half_width > 0.0))
            throw std::invalid_argument("draw_scatterers: half_width must be positive");
        if (!(gain_model.wavelength > 0.0))
            throw std::invalid_argument("draw_scatterers: wavelength must be positive");

        const Vec3 u = line / distance;
        Vec3 e1 = Vec3::UnitX() - Vec3::UnitX().dot(u) * u;
        if (e1.norm() < 1e-9)
            e1 = Vec3::UnitZ() - Vec3::UnitZ().dot(u) * u;
        e1.normalize();
        const Vec3 e2 = u.cross(e1);

        const double lambda = gain_model.wavelength;
        std::vector<Scatterer> paths;
        paths.reserve(count);

        Scatterer los;
        los.type = PathType::los;
        los.position = rx_position;
        los.gain = lambda / (4.0 * kPi * distance) * std::sqrt(gain_model.antenna_gain_lin / gain_model.system_loss_lin);
        los.delay = distance / kSpeedOfLight;
        std::tie(los.tx_elevation, los.tx_azimuth) = direction_angles(line);
        std::tie(los.rx_elevation, los.rx_azimuth) = direction_angles(-line);
        paths.push_back(los);

        std::uniform_real_distribution<double> along(volume.near_fraction * distance, volume.far_fraction * distance);
        std::uniform_real_distribution<double> across(-volume.half_width, volume.half_width);
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5));

        std::vector<double> free_space(count, 0.0);
        double nlos_power = 0.0;
        for (int p = 1; p < count; ++p)
        {
            Scatterer s;
            const double a = along(rng);
            const double b = across(rng);
            const double c = across(rng);
            s.position = tx_position + a * u + b * e1 + c * e2;
            const Vec3 to_scatterer = s.position - tx_position;
            const Vec3 from_rx = s.position - rx_position;
            const double path_length = to_scatterer.norm() + from_rx.norm();
            s.delay = path_length / kSpeedOfLight;
            std::tie(s.tx_elevation, s.tx_azimuth) = direction_angles(to_scatterer);
            std::tie(s.rx_elevation, s.rx_azimuth) = direction_angles(from_rx);
            const double re = normal(rng);
            const double im = normal(rng);
            free_space[p] = lambda / (4.0 * kPi * path_length);
            s.gain = cd(re, im) * free_space[p];
            nlos_power += free_space[p] * free_space[p];
            paths.push_back(s);
        }

        // Rician factor 0 dB: expected aggregate NLoS power equals the LoS power
        if (count > 1)
        {
            const double scale = std::abs(los.gain) / std::sqrt(nlos_power);
            for (int p = 1; p < count; ++p)
                paths[p].gain *= scale;
        }
        return paths;
    }

    std::pair<double, double> electrical_angles(const Scatterer &scatterer, double frequency, double spacing, Side side)
    {
        const double elevation = side == Side::tx ? scatterer.tx_elevation : scatterer.rx_elevation;
        const double azimuth = side == Side::tx ? scatterer.tx_azimuth : scatterer.rx_azimuth;
        const double k = wavenumber(frequency);
        return {k * spacing * std::sin(elevation) * std::sin(azimuth), k * spacing * std::cos(elevation)};
    }

    CVec steering_vector(double psi_x, double psi_z, int grid_x, int grid_z)
    {
        if (grid_x < 1 || grid_z < 1)
            throw std::invalid_argument("steering_vector: grid sizes must be at least 1");
        CVec ax(grid_x), az(grid_z);
        for (int i = 0; i < grid_x; ++i)
            ax[i] = std::polar(1.0, i * psi_x);
        for (int i = 0; i < grid_z; ++i)
            az[i] = std::polar(1.0, i * psi_z);
        CVec out(grid_x * grid_z);
        for (int i = 0; i < grid_x; ++i)
            out.segment(i * grid_z, grid_z) = ax[i] * az;
        return out;
    }

    CVec steering_vector(double psi_x, double psi_z, const std::vector<std::pair<int, int>> &grid)
    {
        CVec out(grid.size());
        for (std::size_t m = 0; m < grid.size(); ++m)
            out[m] = std::polar(1.0, grid[m].first * psi_x + grid[m].second * psi_z);
        return out;
    }

    CMat channel_matrix(const std::vector<Scatterer> &scatterers, double frequency, const SimGeometry &tx, const SimGeometry &rx,
                        double reference_delay)
    {
        if (scatterers.empty())
            throw std::invalid_argument("channel_matrix: empty scatterer list");
        CMat G = CMat::Zero(rx.num_atoms(), tx.num_atoms());
        for (const auto &s : scatterers)
        {
            const auto [tx_x, tx_z] = electrical_angles(s, frequency, tx.atom_spacing, Side::tx);
            const auto [rx_x, rx_z] = electrical_angles(s, frequency, rx.atom_spacing, Side::rx);
            const CVec at = steering_vector(tx_x, tx_z, tx.grid);
            const CVec ar = steering_vector(rx_x, rx_z, rx.grid);
            const cd coeff = s.gain * std::polar(1.0, -2.0 * kPi * frequency * (s.delay - reference_delay));
            G.noalias() += (coeff * ar) * at.adjoint();
        }
        return G;
    }

    CMat SvdTargets::precoder() const { return F.leftCols(target.size()); }
    CMat SvdTargets::combiner() const { return E.leftCols(target.size()).adjoint(); }

    SvdTargets svd_targets(const CMat &G, int num_streams)
    {
        if (num_streams < 1 || num_streams > std::min(G.rows(), G.cols()))
            throw std::invalid_argument("svd_targets: number of streams must lie in [1, min(M, N)]");
        Eigen::JacobiSVD<CMat> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success)
            throw std::runtime_error("svd_targets: SVD did not converge");
        SvdTargets t;
        t.E = svd.matrixU();
        t.singular_values = svd.singularValues();
        t.F = svd.matrixV();
        t.target = t.singular_values.head(num_streams);
        return t;
    }

    SubcarrierContext build_subcarrier_context(const SimGeometry &tx, const SimGeometry &rx,
                                               const std::vector<Scatterer> &scatterers, double frequency, int num_streams,
                                               double reference_delay)
    {
        if (tx.num_antennas() != num_streams || rx.num_antennas() != num_streams)
            throw std::invalid_argument("antenna count must equal the number of data streams");
        SubcarrierContext ctx;
        ctx.frequency = frequency;
        ctx.wavenumber = wavenumber(frequency);
        ctx.transfers = build_layer_transfers(tx, rx, frequency);
        ctx.G = channel_matrix(scatterers, frequency, tx, rx, reference_delay);
        ctx.svd = svd_targets(ctx.G, num_streams);
        return ctx;
    }

    std::string scatterers_to_json(const std::vector<Scatterer> &scatterers)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &s : scatterers)
        {
            arr.push_back({{"type", s.type == PathType::los ? "los" : "nlos"},
                           {"position", {s.position.x(), s.position.y(), s.position.z()}},
                           {"gain", {s.gain.real(), s.gain.imag()}},
                           {"delay", s.delay},
                           {"tx_elevation", s.tx_elevation},
                           {"tx_azimuth", s.tx_azimuth},
                           {"rx_elevation", s.rx_elevation},
                           {"rx_azimuth", s.rx_azimuth}});
        }
        return nlohmann::json{{"scatterers", arr}}.dump(2);
    }

    std::vector<Scatterer> scatterers_from_json(const std::string &text)
    {
        const auto doc = nlohmann::json::parse(text);
        std::vector<Scatterer> out;
        for (const auto &j : doc.at("scatterers"))
        {
            Scatterer s;
            s.type = j.at("type").get<std::string>() == "los" ? PathType::los : PathType::nlos;
            const auto &p = j.at("position");
            s.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
            s.gain = cd(j.at("gain").at(0).get<double>(), j.at("gain").at(1).get<double>());
            s.delay = j.at("delay").get<double>();
            s.tx_elevation = j.at("tx_elevation").get<double>();
            s.tx_azimuth = j.at("tx_azimuth").get<double>();
            s.rx_elevation = j.at("rx_elevation").get<double>();
            s.rx_azimuth = j.at("rx_azimuth").get<double>();
            out.push_back(s);
        }
        return out;
    }
}
