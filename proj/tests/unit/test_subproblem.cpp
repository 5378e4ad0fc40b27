// SPDX-License-Identifier: Apache-2.0

#include "simbf/subproblem.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace simbf;

namespace
{
    QuadraticForm random_form(int n, std::mt19937_64 &rng)
    {
        const CMat R = test::random_matrix(n, n, rng);
        return {R * R.adjoint(), test::random_matrix(n, 1, rng).col(0), 5.0};
    }
}

TEST_CASE("previous iterate is feasible with zero slack")
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k)
    {
        const auto form = random_form(4, rng);
        const CVec x0 = test::random_unit(4, rng);
        const auto sub = build_pccp_subproblem(form, x0, 2.0, 0.7);
        CHECK(sub.tight_slack(x0).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(sub.max_violation(x0, RVec::Zero(8)) < 1e-15);
        CHECK(sub.objective(x0, RVec::Zero(8)) == doctest::Approx(form.evaluate(x0, 0.7)).epsilon(1e-15));
    }
}

TEST_CASE("solutions are feasible, tight and no worse than the previous iterate")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> pen(0.1, 100.0), al(0.2, 3.0);
    for (int k = 0; k < 40; ++k)
    {
        const int n = 1 + k % 5;
        const auto form = random_form(n, rng);
        const CVec x0 = test::random_unit(n, rng);
        const auto sub = build_pccp_subproblem(form, x0, pen(rng), al(rng));
        const auto sol = solve_subproblem(sub);
        REQUIRE(sol.converged);
        CHECK(sol.kkt_residual <= 1e-8);
        CHECK(sub.max_violation(sol.x, sol.slack) <= 1e-12);
        CHECK((sol.slack - sub.tight_slack(sol.x)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(sol.objective == doctest::Approx(sub.objective(sol.x, sol.slack)).epsilon(1e-12));
        CHECK(sol.objective <= sub.objective(x0, RVec::Zero(2 * n)) + 1e-9);

        // Convexity: no nearby point is better
        std::normal_distribution<double> g(0.0, 1.0);
        for (int t = 0; t < 20; ++t)
        {
            CVec d(n);
            for (int m = 0; m < n; ++m)
                d[m] = cd(g(rng), g(rng));
            const CVec y = sol.x + 1e-3 * d;
            CHECK(sub.objective(y, sub.tight_slack(y)) >= sol.objective - 1e-7 * std::max(1.0, std::abs(sol.objective)));
        }
    }
}

TEST_CASE("closed-form minimizers")
{
    std::mt19937_64 rng(3);
    SUBCASE("zero penalty: unconstrained least squares")
    {
        for (int k = 0; k < 10; ++k)
        {
            auto form = random_form(3, rng);
            form.A += CMat::Identity(3, 3);
            const double alpha = 1.3;
            const auto sol = solve_subproblem(build_pccp_subproblem(form, test::random_unit(3, rng), 0.0, alpha));
            const CVec oracle = form.A.ldlt().solve(form.b) / alpha;
            CHECK((sol.x - oracle).norm() <= 1e-6 * oracle.norm());
        }
    }
    SUBCASE("pure linear term along x_prev: radius max(1, alpha kappa / rho)")
    {
        for (double kappa : {0.5, 2.0, 10.0})
            for (double rho : {1.0, 4.0})
            {
                const CVec x0 = test::random_unit(3, rng);
                const QuadraticForm form{CMat::Zero(3, 3), kappa * x0, 0.0};
                const auto sol = solve_subproblem(build_pccp_subproblem(form, x0, rho, 1.0));
                const double r = std::max(1.0, kappa / rho);
                CHECK((sol.x - r * x0).norm() <= 1e-6 * r);
                CHECK(sol.objective == doctest::Approx(-2 * kappa * 3 * r + rho * 3 * std::max(0.0, r * r - 1)).epsilon(1e-7));
            }
    }
    SUBCASE("pure quadratic term: radius min(1, rho / (alpha^2 a))")
    {
        for (double a : {0.5, 2.0, 20.0})
            for (double rho : {1.0, 4.0})
            {
                const CVec x0 = test::random_unit(2, rng);
                const QuadraticForm form{a * CMat::Identity(2, 2), CVec::Zero(2), 0.0};
                const double alpha = 0.9;
                const auto sol = solve_subproblem(build_pccp_subproblem(form, x0, rho, alpha));
                const double r = std::min(1.0, rho / (alpha * alpha * a));
                CHECK((sol.x - r * x0).norm() <= 1e-6);
            }
    }
    SUBCASE("scalar instance against a polar grid search")
    {
        for (int k = 0; k < 10; ++k)
        {
            const auto form = random_form(1, rng);
            const CVec x0 = test::random_unit(1, rng);
            const auto sub = build_pccp_subproblem(form, x0, 3.0, 1.1);
            const auto sol = solve_subproblem(sub);
            double best = 1e300;
            CVec x(1);
            for (int i = 0; i <= 2000; ++i)
                for (int j = 0; j < 2000; ++j)
                {
                    x[0] = std::polar(2.0 * i / 2000, 2 * kPi * j / 2000);
                    best = std::min(best, sub.objective(x, sub.tight_slack(x)));
                }
            CHECK(sol.objective <= best + 1e-12);
            CHECK(best - sol.objective <= 1e-4 * std::max(1.0, std::abs(best)));
        }
    }
}

TEST_CASE("invalid subproblems are rejected")
{
    std::mt19937_64 rng(4);
    const auto form = random_form(2, rng);
    CVec x0 = test::random_unit(2, rng);
    CHECK_THROWS_AS(build_pccp_subproblem(form, x0, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_pccp_subproblem(form, test::random_unit(3, rng), 1.0, 1.0), std::invalid_argument);
    x0[1] *= 1.01;
    CHECK_THROWS_AS(build_pccp_subproblem(form, x0, 1.0, 1.0), std::invalid_argument);
}
