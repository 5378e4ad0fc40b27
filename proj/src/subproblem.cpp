// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simbf
{
    double PccpSubproblem::objective(const CVec &x, const RVec &slack) const
    {
        return form.evaluate(x, alpha) + penalty * slack.sum();
    }

    RVec PccpSubproblem::tight_slack(const CVec &x) const
    {
        const int M = dimension();
        RVec s(2 * M);
        for (int m = 0; m < M; ++m)
        {
            const double lower = std::norm(x_prev[m]) - 2.0 * (std::conj(x[m]) * x_prev[m]).real() + 1.0;
            s[m] = std::max(0.0, lower);
            s[M + m] = std::max(0.0, std::norm(x[m]) - 1.0);
        }
        return s;
    }

    double PccpSubproblem::max_violation(const CVec &x, const RVec &slack) const
    {
        const int M = dimension();
        double v = 0.0;
        for (int m = 0; m < M; ++m)
        {
            v = std::max(v, std::norm(x[m]) - 1.0 - slack[M + m]);
            v = std::max(v, std::norm(x_prev[m]) - 2.0 * (std::conj(x[m]) * x_prev[m]).real() - slack[m] + 1.0);
            v = std::max(v, -slack[m]);
            v = std::max(v, -slack[M + m]);
        }
        return v;
    }

    PccpSubproblem build_pccp_subproblem(const QuadraticForm &form, const CVec &x_prev, double penalty, double alpha)
    {
        if (form.A.rows() != x_prev.size() || form.A.cols() != x_prev.size() || form.b.size() != x_prev.size())
            throw std::invalid_argument("build_pccp_subproblem: form and x_prev sizes differ");
        if (!(penalty >= 0.0))
            throw std::invalid_argument("build_pccp_subproblem: penalty must be non-negative");
        for (Eigen::Index m = 0; m < x_prev.size(); ++m)
            if (std::abs(std::abs(x_prev[m]) - 1.0) > 1e-9)
                throw std::invalid_argument("build_pccp_subproblem: x_prev must have unit modulus");
        return {form, x_prev, penalty, alpha};
    }

    namespace
    {
        // Real embedding of a Hermitian matrix on interleaved (re, im) coordinates
        Eigen::MatrixXd realify(const CMat &A)
        {
            const Eigen::Index n = A.rows();
            Eigen::MatrixXd R(2 * n, 2 * n);
            for (Eigen::Index c = 0; c < n; ++c)
                for (Eigen::Index r = 0; r < n; ++r)
                {
                    const cd a = A(r, c);
                    R(2 * r, 2 * c) = a.real();
                    R(2 * r, 2 * c + 1) = -a.imag();
                    R(2 * r + 1, 2 * c) = a.imag();
                    R(2 * r + 1, 2 * c + 1) = a.real();
                }
            return R;
        }

        // Primal-dual iterate. Constraints per element m:
        //   c1 = |x|^2 - 1 - u,  c2 = |x0|^2 + 1 - 2 Re(x^* x0) - v,  c3 = -u,  c4 = -v
        struct Iterate
        {
            Eigen::VectorXd y; // interleaved (re, im) of x
            Eigen::VectorXd u, v;
            Eigen::MatrixX4d lambda; // M x 4
        };

        struct Problem
        {
            Eigen::MatrixXd H;    // Hessian of the smooth objective in y
            Eigen::VectorXd beta; // linear term: grad q = H y - 2 alpha beta
            Eigen::VectorXd x0;   // interleaved previous iterate
            Eigen::VectorXd k0;   // |x0_m|^2 + 1
            double penalty;
            int M;

            Eigen::MatrixX4d constraints(const Iterate &it) const
            {
                Eigen::MatrixX4d c(M, 4);
                for (int m = 0; m < M; ++m)
                {
                    const double a = it.y[2 * m], b = it.y[2 * m + 1];
                    c(m, 0) = a * a + b * b - 1.0 - it.u[m];
                    c(m, 1) = k0[m] - 2.0 * (a * x0[2 * m] + b * x0[2 * m + 1]) - it.v[m];
                    c(m, 2) = -it.u[m];
                    c(m, 3) = -it.v[m];
                }
                return c;
            }

            // Dual residual split into the y, u, v blocks
            void dual_residual(const Iterate &it, double alpha, Eigen::VectorXd &ry, Eigen::VectorXd &ru, Eigen::VectorXd &rv) const
            {
                ry = H * it.y - 2.0 * alpha * beta;
                ru = Eigen::VectorXd::Constant(M, penalty);
                rv = Eigen::VectorXd::Constant(M, penalty);
                for (int m = 0; m < M; ++m)
                {
                    const double l1 = it.lambda(m, 0), l2 = it.lambda(m, 1);
                    ry[2 * m] += l1 * 2.0 * it.y[2 * m] - l2 * 2.0 * x0[2 * m];
                    ry[2 * m + 1] += l1 * 2.0 * it.y[2 * m + 1] - l2 * 2.0 * x0[2 * m + 1];
                    ru[m] += -l1 - it.lambda(m, 2);
                    rv[m] += -l2 - it.lambda(m, 3);
                }
            }
        };

        CVec to_complex(const Eigen::VectorXd &y)
        {
            CVec x(y.size() / 2);
            for (Eigen::Index m = 0; m < x.size(); ++m)
                x[m] = cd(y[2 * m], y[2 * m + 1]);
            return x;
        }

        SubproblemSolution finish(const PccpSubproblem &sub, const CVec &x, double residual, int iterations, bool converged)
        {
            SubproblemSolution out;
            out.x = x;
            out.slack = sub.tight_slack(x);
            out.objective = sub.objective(x, out.slack);
            out.kkt_residual = residual;
            out.iterations = iterations;
            out.converged = converged;
            return out;
        }

        // Without a slack penalty the constraints are inactive and the problem is an unconstrained quadratic
        SubproblemSolution solve_unpenalized(const PccpSubproblem &sub, double kkt_tol)
        {
            if (sub.alpha == 0.0)
                return finish(sub, sub.x_prev, 0.0, 0, true);
            const CMat H = sub.alpha * sub.alpha * sub.form.A;
            const CVec rhs = sub.alpha * sub.form.b;
            Eigen::CompleteOrthogonalDecomposition<CMat> cod(H);
            const CVec x = cod.solve(rhs);
            const double residual = (H * x - rhs).cwiseAbs().maxCoeff() * 2.0;
            return finish(sub, x, residual, 1, residual <= kkt_tol);
        }
    }

    SubproblemSolution solve_subproblem(const PccpSubproblem &sub, double kkt_tol, int max_iterations)
    {
        if (!(kkt_tol > 0.0))
            throw std::invalid_argument("solve_subproblem: kkt_tol must be positive");
        if (sub.penalty == 0.0)
            return solve_unpenalized(sub, kkt_tol);

        const int M = sub.dimension();
        const double alpha = sub.alpha;
        Problem p;
        p.M = M;
        p.penalty = sub.penalty;
        p.H = 2.0 * alpha * alpha * realify(sub.form.A);
        p.beta.resize(2 * M);
        p.x0.resize(2 * M);
        p.k0.resize(M);
        for (int m = 0; m < M; ++m)
        {
            p.beta[2 * m] = sub.form.b[m].real();
            p.beta[2 * m + 1] = sub.form.b[m].imag();
            p.x0[2 * m] = sub.x_prev[m].real();
            p.x0[2 * m + 1] = sub.x_prev[m].imag();
            p.k0[m] = std::norm(sub.x_prev[m]) + 1.0;
        }

        // Strictly feasible start: x = x_prev with unit slacks, multipliers splitting the penalty evenly
        Iterate it;
        it.y = p.x0;
        it.u = Eigen::VectorXd::Ones(M);
        it.v = Eigen::VectorXd::Ones(M);
        it.lambda = Eigen::MatrixX4d::Constant(M, 4, 0.5 * p.penalty);

        const double n_constraints = 4.0 * M;
        // Stationarity is measured relative to the size of the gradient terms that cancel at the optimum
        const double grad_scale = std::max({1.0, 2.0 * std::abs(alpha) * p.beta.cwiseAbs().maxCoeff(), (p.H * p.x0).cwiseAbs().maxCoeff(), 2.0 * p.penalty});
        double residual = 0.0;
        int iter = 0;

        struct Direction
        {
            Eigen::VectorXd dy, du, dv;
            Eigen::MatrixX4d dl;
        };

        for (; iter < max_iterations; ++iter)
        {
            const Eigen::MatrixX4d c = p.constraints(it);
            const double gap = -(c.array() * it.lambda.array()).sum();
            Eigen::VectorXd ry, ru, rv;
            p.dual_residual(it, alpha, ry, ru, rv);
            const double stationarity = std::max({ry.cwiseAbs().maxCoeff(), ru.cwiseAbs().maxCoeff(), rv.cwiseAbs().maxCoeff()}) / grad_scale;
            residual = std::max(stationarity, gap);
            if (stationarity <= kkt_tol && gap <= kkt_tol)
                return finish(sub, to_complex(it.y), residual, iter, true);

            const Eigen::MatrixX4d d = (-it.lambda.array() / c.array()).matrix();

            // Condensed Newton matrix in y; u and v are eliminated per element
            Eigen::MatrixXd K = p.H;
            Eigen::VectorXd uu(M), vv(M);
            std::vector<Eigen::Vector2d> g1(M), g2(M), xu(M), xv(M);
            for (int m = 0; m < M; ++m)
            {
                g1[m] = 2.0 * Eigen::Vector2d(it.y[2 * m], it.y[2 * m + 1]);
                g2[m] = -2.0 * Eigen::Vector2d(p.x0[2 * m], p.x0[2 * m + 1]);
                xu[m] = -d(m, 0) * g1[m];
                xv[m] = -d(m, 1) * g2[m];
                uu[m] = d(m, 0) + d(m, 2);
                vv[m] = d(m, 1) + d(m, 3);
                Eigen::Matrix2d local = 2.0 * it.lambda(m, 0) * Eigen::Matrix2d::Identity();
                local += d(m, 0) * g1[m] * g1[m].transpose() + d(m, 1) * g2[m] * g2[m].transpose();
                local -= xu[m] * xu[m].transpose() / uu[m] + xv[m] * xv[m].transpose() / vv[m];
                K.block<2, 2>(2 * m, 2 * m) += local;
            }
            Eigen::LLT<Eigen::MatrixXd> llt(K);
            const bool use_llt = llt.info() == Eigen::Success;
            Eigen::LDLT<Eigen::MatrixXd> ldlt;
            if (!use_llt)
                ldlt.compute(K);

            // Newton direction for a given centrality residual rc = -lambda * c - target
            auto direction = [&](const Eigen::MatrixX4d &rc)
            {
                Eigen::VectorXd rhs_y = -ry, rhs_u = -ru, rhs_v = -rv;
                for (int m = 0; m < M; ++m)
                {
                    rhs_y.segment<2>(2 * m) -= (rc(m, 0) / c(m, 0)) * g1[m] + (rc(m, 1) / c(m, 1)) * g2[m];
                    rhs_u[m] += rc(m, 0) / c(m, 0) + rc(m, 2) / c(m, 2);
                    rhs_v[m] += rc(m, 1) / c(m, 1) + rc(m, 3) / c(m, 3);
                    rhs_y.segment<2>(2 * m) -= xu[m] * (rhs_u[m] / uu[m]) + xv[m] * (rhs_v[m] / vv[m]);
                }
                Direction dir;
                dir.dy = use_llt ? Eigen::VectorXd(llt.solve(rhs_y)) : Eigen::VectorXd(ldlt.solve(rhs_y));
                dir.du.resize(M);
                dir.dv.resize(M);
                dir.dl.resize(M, 4);
                for (int m = 0; m < M; ++m)
                {
                    const Eigen::Vector2d dym = dir.dy.segment<2>(2 * m);
                    dir.du[m] = (rhs_u[m] - xu[m].dot(dym)) / uu[m];
                    dir.dv[m] = (rhs_v[m] - xv[m].dot(dym)) / vv[m];
                    const double dcs[4] = {g1[m].dot(dym) - dir.du[m], g2[m].dot(dym) - dir.dv[m], -dir.du[m], -dir.dv[m]};
                    for (int i = 0; i < 4; ++i)
                        dir.dl(m, i) = (rc(m, i) - it.lambda(m, i) * dcs[i]) / c(m, i);
                }
                return dir;
            };

            // Largest step keeping lambda > 0 and the linearized constraints negative. The quadratic term of
            // c1 along the step is absorbed into u (see advance), so every constraint moves linearly.
            auto max_step = [&](const Direction &dir)
            {
                double step = 1.0;
                for (int m = 0; m < M; ++m)
                {
                    const Eigen::Vector2d dym = dir.dy.segment<2>(2 * m);
                    const double dcs[4] = {g1[m].dot(dym) - dir.du[m], g2[m].dot(dym) - dir.dv[m], -dir.du[m], -dir.dv[m]};
                    for (int i = 0; i < 4; ++i)
                    {
                        if (dir.dl(m, i) < 0.0)
                            step = std::min(step, -it.lambda(m, i) / dir.dl(m, i));
                        if (dcs[i] > 0.0)
                            step = std::min(step, -c(m, i) / dcs[i]);
                    }
                }
                return step;
            };

            auto advance = [&](const Direction &dir, double step)
            {
                Iterate next;
                next.y = it.y + step * dir.dy;
                next.u = it.u + step * dir.du;
                next.v = it.v + step * dir.dv;
                next.lambda = it.lambda + step * dir.dl;
                for (int m = 0; m < M; ++m)
                    next.u[m] += step * step * dir.dy.segment<2>(2 * m).squaredNorm();
                return next;
            };

            // Predictor with no centering picks the barrier weight for the actual step
            const Eigen::MatrixX4d rc_aff = (-it.lambda.array() * c.array()).matrix();
            const Direction aff = direction(rc_aff);
            const double step_aff = max_step(aff);
            double gap_aff = 0.0;
            for (int m = 0; m < M; ++m)
            {
                const Eigen::Vector2d dym = aff.dy.segment<2>(2 * m);
                const double dcs[4] = {g1[m].dot(dym) - aff.du[m], g2[m].dot(dym) - aff.dv[m], -aff.du[m], -aff.dv[m]};
                for (int i = 0; i < 4; ++i)
                    gap_aff -= (c(m, i) + step_aff * dcs[i]) * (it.lambda(m, i) + step_aff * aff.dl(m, i));
            }
            const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 1e-4, 1.0);
            // Driving the gap far below the attainable stationarity only degrades the Newton system
            const double t = n_constraints / std::max(sigma * gap, 0.1 * kkt_tol);
            const Eigen::MatrixX4d rc = (rc_aff.array() - 1.0 / t).matrix();
            const Direction dir = direction(rc);

            // Fraction to the boundary, then backtrack into a wide neighborhood of the central path
            double step = 0.99 * max_step(dir);
            Iterate trial;
            bool accepted = false;
            for (int k = 0; k < 60 && !accepted; ++k, step *= 0.5)
            {
                trial = advance(dir, step);
                const Eigen::ArrayXXd products = -(p.constraints(trial).array() * trial.lambda.array());
                accepted = (trial.lambda.array() > 0.0).all() && (products > 0.0).all() &&
                           products.minCoeff() >= 1e-3 * products.sum() / n_constraints;
            }
            if (!accepted)
                break; // no strictly feasible progress possible
            it = std::move(trial);
        }

        return finish(sub, to_complex(it.y), residual, iter, false);
    }
}
