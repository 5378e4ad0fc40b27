// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/objective.hpp"

#include <stdexcept>

namespace simbf
{
    double QuadraticForm::evaluate(const CVec &x, double alpha) const
    {
        const double quad = x.dot(A * x).real(); // x^H A x
        const double lin = b.dot(x).real();      // Re(b^H x)
        return alpha * alpha * quad - 2.0 * alpha * lin + c;
    }

    CMat end_to_end(const SubcarrierContext &ctx, const PhaseState &state)
    {
        return cascade_rx(ctx.transfers, state) * ctx.G * cascade_tx(ctx.transfers, state);
    }

    std::vector<double> subcarrier_errors(const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        std::vector<double> out;
        out.reserve(contexts.size());
        for (const auto &ctx : contexts)
            out.push_back((state.alpha * end_to_end(ctx, state) - ctx.target_matrix()).squaredNorm());
        return out;
    }

    double fitting_error(const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        double total = 0.0;
        for (double e : subcarrier_errors(state, contexts))
            total += e;
        return total;
    }

    double total_target_energy(std::span<const SubcarrierContext> contexts)
    {
        double total = 0.0;
        for (const auto &ctx : contexts)
            total += ctx.target_norm2();
        return total;
    }

    static void check_layer(int layer, int count, const char *what)
    {
        if (layer < 1 || layer > count)
            throw std::out_of_range(what);
    }

    QuadraticForm quadratic_form_tx(int layer, const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        if (contexts.empty())
            throw std::invalid_argument("quadratic_form_tx: no subcarriers");
        const auto &first = contexts.front().transfers;
        check_layer(layer, first.num_tx_layers(), "quadratic_form_tx: layer out of range");
        const int M = first.num_tx_atoms();

        QuadraticForm form{CMat::Zero(M, M), CVec::Zero(M), 0.0};
        for (const auto &ctx : contexts)
        {
            const CMat QG = cascade_rx(ctx.transfers, state) * ctx.G;                // S x M
            const CMat B = apply_tx_left(ctx.transfers, state, layer, QG);           // Q G P^L
            const CMat R = tx_right(ctx.transfers, state, layer);                    // P^R, M x S
            if (B.cols() != M || R.rows() != M)
                throw std::invalid_argument("quadratic_form_tx: inconsistent shapes across subcarriers");
            // Tr(D^H B^H B D R R^H) = phi^H ((B^H B) o (R R^H)^T) phi
            form.A.noalias() += (B.adjoint() * B).cwiseProduct((R * R.adjoint()).transpose());
            // Tr(B D R T^H) = sum_m phi_m (R T^H B)_mm
            const CMat TB = ctx.target().cast<cd>().asDiagonal() * B;               // T^H B (T real diagonal)
            form.b += R.cwiseProduct(TB.transpose()).rowwise().sum().conjugate();
            form.c += ctx.target_norm2();
        }
        form.A = 0.5 * (form.A + form.A.adjoint()).eval();
        return form;
    }

    QuadraticForm quadratic_form_rx(int layer, const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        if (contexts.empty())
            throw std::invalid_argument("quadratic_form_rx: no subcarriers");
        const auto &first = contexts.front().transfers;
        check_layer(layer, first.num_rx_layers(), "quadratic_form_rx: layer out of range");
        const int N = first.num_rx_atoms();

        QuadraticForm form{CMat::Zero(N, N), CVec::Zero(N), 0.0};
        for (const auto &ctx : contexts)
        {
            const CMat GP = ctx.G * cascade_tx(ctx.transfers, state);                // N x S
            const CMat C = rx_left(ctx.transfers, state, layer);                     // Q^L, S x N
            const CMat E = apply_rx_right(ctx.transfers, state, layer, GP);          // Q^R G P, N x S
            if (C.cols() != N || E.rows() != N)
                throw std::invalid_argument("quadratic_form_rx: inconsistent shapes across subcarriers");
            form.A.noalias() += (C.adjoint() * C).cwiseProduct((E * E.adjoint()).transpose());
            const CMat TC = ctx.target().cast<cd>().asDiagonal() * C;
            form.b += E.cwiseProduct(TC.transpose()).rowwise().sum().conjugate();
            form.c += ctx.target_norm2();
        }
        form.A = 0.5 * (form.A + form.A.adjoint()).eval();
        return form;
    }

    double optimal_alpha(const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        double num = 0.0, den = 0.0;
        for (const auto &ctx : contexts)
        {
            const CMat H = end_to_end(ctx, state);
            num += (ctx.target_matrix().adjoint() * H).trace().real();
            den += H.squaredNorm();
        }
        if (!(den > 0.0))
            throw DegenerateCascade("optimal_alpha: effective channel is zero on every subcarrier");
        return num / den;
    }

    std::vector<double> subcarrier_nmse(const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        const auto errors = subcarrier_errors(state, contexts);
        std::vector<double> out(errors.size());
        for (std::size_t i = 0; i < errors.size(); ++i)
        {
            const double t = contexts[i].target_norm2();
            if (!(t > 0.0))
                throw std::domain_error("nmse: zero target norm");
            out[i] = errors[i] / t;
        }
        return out;
    }

    double nmse(const PhaseState &state, std::span<const SubcarrierContext> contexts)
    {
        double total = 0.0;
        for (double v : subcarrier_nmse(state, contexts))
            total += v;
        return total;
    }
}
