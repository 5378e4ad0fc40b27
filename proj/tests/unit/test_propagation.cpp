// SPDX-License-Identifier: Apache-2.0

#include "simbf/propagation.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace simbf;

namespace
{
    // Independent long-double evaluation of the Rayleigh-Sommerfeld coefficient
    std::complex<long double> rs_oracle(long double area, long double gap, long double t, long double f)
    {
        const long double c = 299792458.0L;
        const long double pi = 3.141592653589793238462643383279502884L;
        const std::complex<long double> prefactor(area * gap / (t * t * 2.0L * pi * t), -area * gap * f / (t * t * c));
        const long double phase = 2.0L * pi * t * f / c;
        return prefactor * std::complex<long double>(std::cos(phase), std::sin(phase));
    }

    double rel(cd a, std::complex<long double> b)
    {
        const std::complex<long double> d = std::complex<long double>(a.real(), a.imag()) - b;
        return double(std::abs(d) / std::abs(b));
    }

    double rel(const CMat &a, const CMat &b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
}

TEST_CASE("rs_coefficient against the long-double formula")
{
    const double lambda = wavelength(28e9);
    const double area = lambda * lambda / 4, d = 0.05 / 7;
    CHECK(rel(rs_coefficient(area, d, d, 28e9), rs_oracle(area, d, d, 28e9)) < 1e-12);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(d, 10 * d), f(27e9, 29e9);
    for (int k = 0; k < 200; ++k)
    {
        const double tk = t(rng), fk = f(rng);
        CHECK(rel(rs_coefficient(area, d, tk, fk), rs_oracle(area, d, tk, fk)) < 1e-12);
    }
    CHECK(rs_coefficient(0.0, d, d, 28e9) == cd(0.0, 0.0));
    // Doubling the distance shrinks the modulus by more than 4x since the 1/(2 pi t) term also decays
    const double ratio = std::abs(rs_coefficient(area, d, 2 * d, 28e9)) / std::abs(rs_coefficient(area, d, d, 28e9));
    const double oracle = double(std::abs(rs_oracle(area, d, 2 * d, 28e9)) / std::abs(rs_oracle(area, d, d, 28e9)));
    CHECK(ratio < 0.25);
    CHECK(ratio == doctest::Approx(oracle).epsilon(1e-12));
    CHECK_THROWS_AS(rs_coefficient(area, d, 0.0, 28e9), std::invalid_argument);
    CHECK_THROWS_AS(rs_coefficient(area, d, d, 0.0), std::invalid_argument);
}

TEST_CASE("layer transfer matrices")
{
    const double lambda = wavelength(28e9);
    SUBCASE("1x1 aligned atom")
    {
        auto cfg = default_stack(1, 1, 1, 1, 28e9);
        const auto g = build_stack_geometry(cfg, Vec3::Zero(), 1);
        const CMat W = layer_transfer_matrix(g, Side::tx, 1, 28e9);
        REQUIRE(W.rows() == 1);
        CHECK(std::abs(W(0, 0) - rs_coefficient(cfg.atom_area, 0.05, 0.05, 28e9)) < 1e-20);
    }
    SUBCASE("mirror-symmetric pair")
    {
        auto cfg = default_stack(2, 2, 1, 1, 28e9);
        const auto g = build_stack_geometry(cfg, Vec3::Zero(), 1);
        const CMat W = layer_transfer_matrix(g, Side::tx, 2, 28e9);
        CHECK(std::abs(W(0, 1) - W(1, 0)) < 1e-15 * std::abs(W(0, 1)));
    }
    SUBCASE("entrywise against recomputed distances")
    {
        auto cfg = default_stack(3, 3, 2, 2, 28e9);
        cfg.antenna_spacing = 0.7 * lambda;
        const auto g = build_stack_geometry(cfg, Vec3(0, 250, 0), -1);
        for (int l = 1; l <= 3; ++l)
        {
            const CMat T = layer_transfer_matrix(g, Side::rx, l, 28.01e9);
            // RX: rows are plane l-1, columns plane l
            REQUIRE(T.rows() == g.planes[l - 1].cols());
            REQUIRE(T.cols() == g.planes[l].cols());
            for (int r = 0; r < T.rows(); ++r)
                for (int c = 0; c < T.cols(); ++c)
                {
                    const Vec3 a = g.planes[l - 1].col(r), b = g.planes[l].col(c);
                    const double t = std::sqrt((a - b).squaredNorm());
                    CHECK(rel(T(r, c), rs_oracle(cfg.atom_area, cfg.layer_gap(), t, 28.01e9)) < 1e-12);
                }
        }
    }
}

TEST_CASE("cascades against explicit products")
{
    auto sys = test::small_system(21, 2, 2, 2, 2, 1);
    const auto &tr = sys.contexts[0].transfers;
    std::mt19937_64 rng(4);
    auto st = PhaseState::random(2, 4, 2, 4, rng);

    const CMat P = tr.tx[1] * tr.tx[0]; // all-zero phases
    const CMat Q = tr.rx[0] * tr.rx[1];
    const auto zero = PhaseState::zeros(2, 4, 2, 4);
    CHECK(rel(cascade_tx(tr, zero), P) < 1e-13);
    CHECK(rel(cascade_rx(tr, zero), Q) < 1e-13);

    auto D = [](const CVec &v) { return CMat(v.asDiagonal()); };
    const CMat Pr = D(st.tx_coefficients(2)) * tr.tx[1] * D(st.tx_coefficients(1)) * tr.tx[0];
    const CMat Qr = tr.rx[0] * D(st.rx_coefficients(1)) * tr.rx[1] * D(st.rx_coefficients(2));
    CHECK(rel(cascade_tx(tr, st), Pr) < 1e-13);
    CHECK(rel(cascade_rx(tr, st), Qr) < 1e-13);

    SUBCASE("common phase offset factors out")
    {
        const double delta = 0.73;
        auto shifted = st;
        shifted.theta[0].array() += delta;
        shifted.zeta[1].array() += delta;
        CHECK(rel(cascade_tx(tr, shifted), std::polar(1.0, delta) * Pr) < 1e-13);
        CHECK(rel(cascade_rx(tr, shifted), std::polar(1.0, delta) * Qr) < 1e-13);
    }
    SUBCASE("single layer with zero phases is the bare transfer")
    {
        auto one = test::small_system(2, 1, 2, 2, 1, 1);
        const auto &t1 = one.contexts[0].transfers;
        const auto z = PhaseState::zeros(1, 4, 1, 4);
        CHECK(rel(cascade_tx(t1, z), t1.tx[0]) == 0.0);
        CHECK(rel(cascade_rx(t1, z), t1.rx[0]) == 0.0);
    }
}

TEST_CASE("partial products reconstruct the cascades")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial)
    {
        const int L = 1 + trial % 3;
        auto sys = test::small_system(100 + trial, L, 2, 3, 2, 1);
        const auto &tr = sys.contexts[0].transfers;
        auto st = PhaseState::random(L, 6, L, 6, rng);
        const CMat P = cascade_tx(tr, st), Q = cascade_rx(tr, st);
        for (int l = 1; l <= L; ++l)
        {
            const auto pt = partial_products_tx(tr, st, l);
            const auto pr = partial_products_rx(tr, st, l);
            CHECK(rel(pt.left * st.tx_coefficients(l).asDiagonal() * pt.right, P) < 1e-12);
            CHECK(rel(pr.left * st.rx_coefficients(l).asDiagonal() * pr.right, Q) < 1e-12);
            if (l == L)
            {
                CHECK(rel(pt.left, CMat::Identity(6, 6)) == 0.0);
                CHECK(rel(pr.right, CMat::Identity(6, 6)) == 0.0);
            }
            if (l == 1)
                CHECK(rel(pt.right, tr.tx[0]) == 0.0);

            // Row-vector helpers agree with the square factors
            const CMat X = test::random_matrix(2, 6, rng);
            CHECK(rel(apply_tx_left(tr, st, l, X), X * pt.left) < 1e-12);
            CHECK(rel(tx_right(tr, st, l), pt.right) < 1e-12);
            CHECK(rel(rx_left(tr, st, l), pr.left) < 1e-12);
            const CMat Y = test::random_matrix(6, 2, rng);
            CHECK(rel(apply_rx_right(tr, st, l, Y), pr.right * Y) < 1e-12);
        }
        CHECK_THROWS(partial_products_tx(tr, st, 0));
        CHECK_THROWS(partial_products_rx(tr, st, L + 1));
    }
}

TEST_CASE("cascade is linear in one layer's coefficients")
{
    auto sys = test::small_system(31, 3, 2, 2, 2, 1);
    const auto &tr = sys.contexts[0].transfers;
    std::mt19937_64 rng(9);
    auto st = PhaseState::random(3, 4, 3, 4, rng);
    const auto pp = partial_products_tx(tr, st, 2);
    const CVec a = test::random_unit(4, rng), b = test::random_unit(4, rng);
    const cd s(0.3, -1.2), t(2.0, 0.5);
    auto apply = [&](const CVec &x) { return CMat(pp.left * x.asDiagonal() * pp.right); };
    CHECK(rel(apply(s * a + t * b), s * apply(a) + t * apply(b)) < 1e-12);
}

TEST_CASE("transfers vary continuously with frequency")
{
    auto cfg = default_stack(2, 3, 3, 2, 28e9);
    const auto g = build_stack_geometry(cfg, Vec3::Zero(), 1);
    const CMat W0 = layer_transfer_matrix(g, Side::tx, 2, 28e9);
    double prev = 0.0;
    for (double df : {1e3, 1e4, 1e5, 1e6})
    {
        const double change = rel(layer_transfer_matrix(g, Side::tx, 2, 28e9 + df), W0);
        CHECK(change > prev);
        CHECK(change < 1e-9 * df);
        prev = change;
    }
}
