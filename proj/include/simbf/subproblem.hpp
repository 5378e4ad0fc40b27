// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#ifndef SIMBF_SUBPROBLEM_HPP
#define SIMBF_SUBPROBLEM_HPP

#include "simbf/objective.hpp"
#include "simbf/types.hpp"

namespace simbf
{
    // Convex restriction of one layer's problem around the previous iterate x_prev:
    //
    //   min_{x, s}  alpha^2 x^H A x - 2 alpha Re(b^H x) + c + penalty * sum(s)
    //   s.t.        |x_m|^2 <= 1 + s_{M+m}
    //               |x_prev,m|^2 - 2 Re(x_m^* x_prev,m) <= s_m - 1
    //               s >= 0
    //
    // Slack layout: s[0, M) linearized lower bounds, s[M, 2M) upper bounds.
    struct PccpSubproblem
    {
        QuadraticForm form;
        CVec x_prev;
        double penalty = 0.0;
        double alpha = 1.0;

        int dimension() const { return int(x_prev.size()); }

        // Objective value including the penalty term
        double objective(const CVec &x, const RVec &slack) const;

        // Smallest feasible slack for a given x
        RVec tight_slack(const CVec &x) const;

        // Largest constraint violation of (x, s), 0 when feasible
        double max_violation(const CVec &x, const RVec &slack) const;
    };

    // Throws std::invalid_argument if x_prev is not unit-modulus (1e-9) or the penalty is negative
    PccpSubproblem build_pccp_subproblem(const QuadraticForm &form, const CVec &x_prev, double penalty, double alpha);

    struct SubproblemSolution
    {
        CVec x;
        RVec slack;                // Tight slack at x
        double objective = 0.0;    // Penalized objective at (x, slack)
        double kkt_residual = 0.0; // max(stationarity, duality gap) at exit
        int iterations = 0;
        bool converged = false;
    };

    // Primal-dual interior-point solve. 'converged' is false when the iteration cap is hit before
    // the KKT residual drops below kkt_tol.
    SubproblemSolution solve_subproblem(const PccpSubproblem &sub, double kkt_tol = 1e-8, int max_iterations = 200);
}

#endif
