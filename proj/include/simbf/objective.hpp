// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_OBJECTIVE_HPP
#define SIMBF_OBJECTIVE_HPP

#include "simbf/channel.hpp"
#include "simbf/propagation.hpp"
#include "simbf/types.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace simbf
{
    // Gamma(x) = alpha^2 x^H A x - 2 alpha Re(b^H x) + c, exact in the phase vector x of one layer.
    struct QuadraticForm
    {
        CMat A;       // Hermitian PSD
        CVec b;
        double c = 0.0;

        double evaluate(const CVec &x, double alpha) const;
        QuadraticForm scaled(double factor) const { return {A * factor, b * factor, c * factor}; }
    };

    // Raised when every subcarrier's effective channel Q G P vanishes
    struct DegenerateCascade : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // H_i = Q_i G_i P_i, S x S
    CMat end_to_end(const SubcarrierContext &ctx, const PhaseState &state);

    // Gamma = sum_i || alpha Q_i G_i P_i - [Lambda_i]_{1:S,1:S} ||_F^2
    double fitting_error(const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Per-subcarrier squared error (before summation)
    std::vector<double> subcarrier_errors(const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Quadratic form of Gamma in phi^l (TX layer l, 1-based) with everything else fixed
    QuadraticForm quadratic_form_tx(int layer, const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Quadratic form of Gamma in psi^k (RX layer k, 1-based)
    QuadraticForm quadratic_form_rx(int layer, const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Closed-form real minimizer of Gamma over alpha. Throws DegenerateCascade on a zero denominator.
    double optimal_alpha(const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // sum_i ||alpha Q G P - T||^2 / ||T||^2. Throws std::domain_error on a zero target.
    double nmse(const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Per-subcarrier normalized errors (the terms of nmse)
    std::vector<double> subcarrier_nmse(const PhaseState &state, std::span<const SubcarrierContext> contexts);

    // Sum of ||T_i||_F^2 over the subcarriers
    double total_target_energy(std::span<const SubcarrierContext> contexts);
}

#endif
