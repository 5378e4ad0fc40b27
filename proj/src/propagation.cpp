// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/propagation.hpp"

#include <cmath>
#include <stdexcept>

namespace simbf
{
    PhaseState PhaseState::zeros(int num_tx_layers, int tx_atoms, int num_rx_layers, int rx_atoms)
    {
        PhaseState s;
        s.theta.assign(num_tx_layers, RVec::Zero(tx_atoms));
        s.zeta.assign(num_rx_layers, RVec::Zero(rx_atoms));
        return s;
    }

    PhaseState PhaseState::random(int num_tx_layers, int tx_atoms, int num_rx_layers, int rx_atoms, std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        PhaseState s = zeros(num_tx_layers, tx_atoms, num_rx_layers, rx_atoms);
        for (auto &v : s.theta)
            for (auto &x : v)
                x = u(rng);
        for (auto &v : s.zeta)
            for (auto &x : v)
                x = u(rng);
        return s;
    }

    static CVec unit_phasors(const RVec &phases)
    {
        CVec out(phases.size());
        for (Eigen::Index i = 0; i < phases.size(); ++i)
            out[i] = std::polar(1.0, phases[i]);
        return out;
    }

    CVec PhaseState::tx_coefficients(int layer) const { return unit_phasors(theta.at(layer - 1)); }
    CVec PhaseState::rx_coefficients(int layer) const { return unit_phasors(zeta.at(layer - 1)); }

    cd rs_coefficient(double atom_area, double layer_gap, double distance, double frequency)
    {
        if (!(distance > 0.0))
            throw std::invalid_argument("rs_coefficient: distance must be positive");
        if (!(frequency > 0.0))
            throw std::invalid_argument("rs_coefficient: frequency must be positive");
        const double amplitude = atom_area * layer_gap / (distance * distance);
        const cd factor(1.0 / (2.0 * kPi * distance), -frequency / kSpeedOfLight);
        return amplitude * factor * std::polar(1.0, 2.0 * kPi * distance * frequency / kSpeedOfLight);
    }

    CMat plane_transfer(const SimGeometry &geometry, int dst_plane, int src_plane, double frequency)
    {
        const auto &dst = geometry.planes.at(dst_plane);
        const auto &src = geometry.planes.at(src_plane);
        CMat T(dst.cols(), src.cols());
        for (Eigen::Index c = 0; c < src.cols(); ++c)
            for (Eigen::Index r = 0; r < dst.cols(); ++r)
                T(r, c) = rs_coefficient(geometry.atom_area, geometry.layer_gap, (dst.col(r) - src.col(c)).norm(), frequency);
        return T;
    }

    CMat layer_transfer_matrix(const SimGeometry &geometry, Side side, int layer, double frequency)
    {
        if (layer < 1 || layer > geometry.num_layers())
            throw std::out_of_range("layer_transfer_matrix: layer out of range");
        if (side == Side::tx)
            return plane_transfer(geometry, layer, layer - 1, frequency);
        return plane_transfer(geometry, layer - 1, layer, frequency);
    }

    LayerTransfers build_layer_transfers(const SimGeometry &tx, const SimGeometry &rx, double frequency)
    {
        LayerTransfers t;
        for (int l = 1; l <= tx.num_layers(); ++l)
            t.tx.push_back(layer_transfer_matrix(tx, Side::tx, l, frequency));
        for (int k = 1; k <= rx.num_layers(); ++k)
            t.rx.push_back(layer_transfer_matrix(rx, Side::rx, k, frequency));
        return t;
    }

    static void check_shapes(const LayerTransfers &transfers, const PhaseState &state)
    {
        if (int(state.theta.size()) != transfers.num_tx_layers() || int(state.zeta.size()) != transfers.num_rx_layers())
            throw std::invalid_argument("phase state layer count does not match transfers");
        for (const auto &t : state.theta)
            if (t.size() != transfers.num_tx_atoms())
                throw std::invalid_argument("TX phase vector length does not match atom count");
        for (const auto &z : state.zeta)
            if (z.size() != transfers.num_rx_atoms())
                throw std::invalid_argument("RX phase vector length does not match atom count");
    }

    CMat cascade_tx(const LayerTransfers &transfers, const PhaseState &state)
    {
        check_shapes(transfers, state);
        CMat X = transfers.tx[0];
        for (int l = 1; l <= transfers.num_tx_layers(); ++l)
        {
            if (l > 1)
                X = transfers.tx[l - 1] * X;
            X = state.tx_coefficients(l).asDiagonal() * X;
        }
        return X;
    }

    CMat cascade_rx(const LayerTransfers &transfers, const PhaseState &state)
    {
        check_shapes(transfers, state);
        CMat Y = transfers.rx[0];
        for (int k = 1; k <= transfers.num_rx_layers(); ++k)
        {
            if (k > 1)
                Y = Y * transfers.rx[k - 1];
            Y = Y * state.rx_coefficients(k).asDiagonal();
        }
        return Y;
    }

    CMat apply_tx_left(const LayerTransfers &transfers, const PhaseState &state, int layer, CMat X)
    {
        for (int j = transfers.num_tx_layers(); j > layer; --j)
        {
            X = X * state.tx_coefficients(j).asDiagonal();
            X = X * transfers.tx[j - 1];
        }
        return X;
    }

    CMat tx_right(const LayerTransfers &transfers, const PhaseState &state, int layer)
    {
        CMat R = transfers.tx[0];
        for (int j = 1; j < layer; ++j)
        {
            R = state.tx_coefficients(j).asDiagonal() * R;
            R = transfers.tx[j] * R;
        }
        return R;
    }

    CMat rx_left(const LayerTransfers &transfers, const PhaseState &state, int layer)
    {
        CMat Y = transfers.rx[0];
        for (int j = 1; j < layer; ++j)
        {
            Y = Y * state.rx_coefficients(j).asDiagonal();
            Y = Y * transfers.rx[j];
        }
        return Y;
    }

    CMat apply_rx_right(const LayerTransfers &transfers, const PhaseState &state, int layer, CMat X)
    {
        for (int j = transfers.num_rx_layers(); j > layer; --j)
        {
            X = state.rx_coefficients(j).asDiagonal() * X;
            X = transfers.rx[j - 1] * X;
        }
        return X;
    }

    PartialProducts partial_products_tx(const LayerTransfers &transfers, const PhaseState &state, int layer)
    {
        check_shapes(transfers, state);
        if (layer < 1 || layer > transfers.num_tx_layers())
            throw std::out_of_range("partial_products_tx: layer out of range");
        const int M = transfers.num_tx_atoms();
        return {apply_tx_left(transfers, state, layer, CMat::Identity(M, M)), tx_right(transfers, state, layer)};
    }

    PartialProducts partial_products_rx(const LayerTransfers &transfers, const PhaseState &state, int layer)
    {
        check_shapes(transfers, state);
        if (layer < 1 || layer > transfers.num_rx_layers())
            throw std::out_of_range("partial_products_rx: layer out of range");
        const int N = transfers.num_rx_atoms();
        return {rx_left(transfers, state, layer), apply_rx_right(transfers, state, layer, CMat::Identity(N, N))};
    }
}
