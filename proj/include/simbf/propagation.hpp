// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_PROPAGATION_HPP
#define SIMBF_PROPAGATION_HPP

#include "simbf/geometry.hpp"
#include "simbf/types.hpp"

#include <random>
#include <vector>

namespace simbf
{
    // Inter-layer transmission matrices of both stacks at one subcarrier.
    //   tx[l-1] = W^l : M x S for l = 1, M x M otherwise (rows: layer l, cols: layer l-1)
    //   rx[k-1] = U^k : S x N for k = 1, N x N otherwise (rows: layer k-1, cols: layer k)
    struct LayerTransfers
    {
        std::vector<CMat> tx;
        std::vector<CMat> rx;

        int num_tx_layers() const { return int(tx.size()); }
        int num_rx_layers() const { return int(rx.size()); }
        int num_tx_atoms() const { return int(tx.front().rows()); }
        int num_rx_atoms() const { return int(rx.front().cols()); }
        int num_streams() const { return int(tx.front().cols()); }
    };

    // Phase shifts of every meta-atom plus the real scaling factor.
    struct PhaseState
    {
        std::vector<RVec> theta; // TX layers, radians
        std::vector<RVec> zeta;  // RX layers, radians
        double alpha = 1.0;

        // All-zero phases with the given layer sizes
        static PhaseState zeros(int num_tx_layers, int tx_atoms, int num_rx_layers, int rx_atoms);
        static PhaseState random(int num_tx_layers, int tx_atoms, int num_rx_layers, int rx_atoms, std::mt19937_64 &rng);

        CVec tx_coefficients(int layer) const; // e^{j theta^l}, layer is 1-based
        CVec rx_coefficients(int layer) const; // e^{j zeta^k}, layer is 1-based
    };

    // Rayleigh-Sommerfeld transmission coefficient between two elements separated by 'distance'.
    // Throws std::invalid_argument for non-positive distance or frequency.
    cd rs_coefficient(double atom_area, double layer_gap, double distance, double frequency);

    // Transmission matrix from every element of plane 'src' to every element of plane 'dst'
    CMat plane_transfer(const SimGeometry &geometry, int dst_plane, int src_plane, double frequency);

    // W^l (side = tx) or U^k (side = rx) of a stack at one frequency, layer is 1-based
    CMat layer_transfer_matrix(const SimGeometry &geometry, Side side, int layer, double frequency);

    LayerTransfers build_layer_transfers(const SimGeometry &tx, const SimGeometry &rx, double frequency);

    // P = Phi^L W^L ... Phi^1 W^1  (M x S)
    CMat cascade_tx(const LayerTransfers &transfers, const PhaseState &state);

    // Q = U^1 Psi^1 ... U^K Psi^K  (S x N)
    CMat cascade_rx(const LayerTransfers &transfers, const PhaseState &state);

    // Factors such that P = left * diag(phi^l) * right.
    // left = Phi^L W^L ... Phi^{l+1} W^{l+1} (identity for l = L), right = W^l Phi^{l-1} ... W^1
    struct PartialProducts
    {
        CMat left;
        CMat right;
    };
    PartialProducts partial_products_tx(const LayerTransfers &transfers, const PhaseState &state, int layer);

    // Q = left * diag(psi^k) * right.
    // left = U^1 Psi^1 ... U^k, right = U^{k+1} Psi^{k+1} ... U^K Psi^K (identity for k = K)
    PartialProducts partial_products_rx(const LayerTransfers &transfers, const PhaseState &state, int layer);

    // Row-vector applications used by the objective; they avoid forming the square partial products.
    // X * P^L for X with M columns, and P^R for layer l.
    CMat apply_tx_left(const LayerTransfers &transfers, const PhaseState &state, int layer, CMat X);
    CMat tx_right(const LayerTransfers &transfers, const PhaseState &state, int layer);
    CMat rx_left(const LayerTransfers &transfers, const PhaseState &state, int layer);
    // Q^R * X for X with N rows
    CMat apply_rx_right(const LayerTransfers &transfers, const PhaseState &state, int layer, CMat X);
}

#endif
