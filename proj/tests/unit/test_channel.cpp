// SPDX-License-Identifier: Apache-2.0

#include "simbf/channel.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace simbf;

TEST_CASE("electrical angles")
{
    Scatterer s;
    s.tx_elevation = kPi / 2;
    s.tx_azimuth = 0.0;
    auto [x, z] = electrical_angles(s, 28e9, wavelength(28e9) / 2, Side::tx);
    CHECK(std::abs(x) < 1e-15);
    CHECK(std::abs(z) < 1e-15);

    s.rx_elevation = kPi / 2;
    s.rx_azimuth = kPi / 2;
    std::tie(x, z) = electrical_angles(s, 28e9, wavelength(28e9) / 2, Side::rx);
    CHECK(x == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(std::abs(z) < 1e-15);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> el(0, kPi), az(-kPi / 2, kPi / 2), f(27.9e9, 28.1e9);
    for (int k = 0; k < 100; ++k)
    {
        s.tx_elevation = el(rng);
        s.tx_azimuth = az(rng);
        const double fk = f(rng), r = 0.004;
        const long double kk = 2.0L * 3.141592653589793238462643383279502884L * fk / 299792458.0L;
        const long double ox = kk * r * std::sin((long double)s.tx_elevation) * std::sin((long double)s.tx_azimuth);
        const long double oz = kk * r * std::cos((long double)s.tx_elevation);
        std::tie(x, z) = electrical_angles(s, fk, r, Side::tx);
        CHECK(std::abs(x - double(ox)) <= 1e-12 * std::max(1.0, std::abs(double(ox))));
        CHECK(std::abs(z - double(oz)) <= 1e-12 * std::max(1.0, std::abs(double(oz))));
    }
}

TEST_CASE("steering vectors")
{
    CHECK((steering_vector(0, 0, 3, 4).array() - cd(1, 0)).abs().maxCoeff() == 0.0);
    const CVec v = steering_vector(kPi, 0, 2, 2);
    const CVec expect = (CVec(4) << 1, 1, -1, -1).finished();
    CHECK((v - expect).norm() < 1e-15);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int k = 0; k < 20; ++k)
    {
        const double px = u(rng), pz = u(rng);
        const CVec a = steering_vector(px, pz, 3, 2);
        for (int mx = 0; mx < 3; ++mx)
            for (int mz = 0; mz < 2; ++mz)
                CHECK(std::abs(a[mx * 2 + mz] - std::exp(cd(0, mx * px + mz * pz))) < 1e-14);
        CHECK((a.array().abs() - 1.0).abs().maxCoeff() < 1e-15);
        CHECK(a[0] == cd(1, 0));
        std::vector<std::pair<int, int>> grid;
        for (int m = 0; m < 6; ++m)
            grid.emplace_back(m / 2, m % 2);
        CHECK((steering_vector(px, pz, grid) - a).norm() < 1e-14);
    }
    CHECK_THROWS_AS(steering_vector(0, 0, 0, 2), std::invalid_argument);
}

TEST_CASE("scatterer draws")
{
    const PathGainModel gain{wavelength(28e9), db_to_linear(9), db_to_linear(3)};
    const Vec3 tx = Vec3::Zero(), rx(0, 250, 0);
    std::mt19937_64 a(7), b(7);
    const auto s1 = draw_scatterers(a, 10, tx, rx, {}, gain);
    const auto s2 = draw_scatterers(b, 10, tx, rx, {}, gain);
    REQUIRE(s1.size() == 10);
    CHECK(scatterers_to_json(s1) == scatterers_to_json(s2));
    CHECK(s1[0].type == PathType::los);
    CHECK(s1[0].delay == doctest::Approx(250 / kSpeedOfLight));
    int los = 0;
    for (const auto &s : s1)
    {
        los += s.type == PathType::los;
        // Triangle inequality: every bounce path is at least the direct one
        const double length = (s.position - tx).norm() + (s.position - rx).norm();
        if (s.type == PathType::nlos)
        {
            CHECK(s.delay == doctest::Approx(length / kSpeedOfLight).epsilon(1e-14));
            CHECK(s.position.y() >= 25.0 - 1e-9);
            CHECK(s.position.y() <= 225.0 + 1e-9);
        }
        CHECK(s.delay >= s1[0].delay);
        CHECK(s.tx_elevation >= 0.0);
        CHECK(s.tx_elevation < kPi);
        CHECK(std::abs(s.tx_azimuth) <= kPi / 2);
        CHECK(std::abs(s.rx_azimuth) <= kPi / 2);
    }
    CHECK(los == 1);
    CHECK(std::abs(s1[0].gain) == doctest::Approx(gain.wavelength / (4 * kPi * 250) * std::sqrt(db_to_linear(6))));

    std::mt19937_64 c(1);
    CHECK_THROWS_AS(draw_scatterers(c, 0, tx, rx, {}, gain), std::invalid_argument);
    CHECK_THROWS_AS(draw_scatterers(c, 5, tx, tx, {}, gain), std::invalid_argument);
    CHECK_THROWS_AS(draw_scatterers(c, 5, tx, rx, {0.5, 0.4, 25}, gain), std::invalid_argument);
}

TEST_CASE("channel matrix")
{
    auto cfg = default_stack(1, 3, 2, 1, 28e9);
    const auto tx = build_stack_geometry(cfg, Vec3::Zero(), 1);
    const auto rx = build_stack_geometry(cfg, Vec3(0, 250, 0), -1);

    SUBCASE("single unit path is a rank-one outer product")
    {
        Scatterer s;
        s.gain = 1.0;
        s.tx_elevation = 1.1;
        s.tx_azimuth = 0.4;
        s.rx_elevation = 2.0;
        s.rx_azimuth = -0.3;
        for (double f : {27.99e9, 28.0e9, 28.01e9})
        {
            const CMat G = channel_matrix({s}, f, tx, rx);
            CHECK(G.norm() == doctest::Approx(6.0).epsilon(1e-13));
            Eigen::JacobiSVD<CMat> svd(G);
            CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
        }
        s.gain = 0.0;
        CHECK(channel_matrix({s}, 28e9, tx, rx).norm() == 0.0);
    }
    SUBCASE("term-by-term accumulation")
    {
        std::mt19937_64 rng(5);
        const PathGainModel gm{wavelength(28e9), 1, 1};
        const auto paths = draw_scatterers(rng, 3, Vec3::Zero(), Vec3(0, 250, 0), {}, gm);
        const double f = 28.003e9;
        CMat oracle = CMat::Zero(6, 6);
        for (const auto &p : paths)
        {
            const double k = 2 * kPi * f / kSpeedOfLight, r = cfg.atom_spacing;
            CVec at(6), ar(6);
            for (int m = 0; m < 6; ++m)
            {
                const int mx = m / 2, mz = m % 2;
                at[m] = std::exp(cd(0, mx * k * r * std::sin(p.tx_elevation) * std::sin(p.tx_azimuth) +
                                        mz * k * r * std::cos(p.tx_elevation)));
                ar[m] = std::exp(cd(0, mx * k * r * std::sin(p.rx_elevation) * std::sin(p.rx_azimuth) +
                                        mz * k * r * std::cos(p.rx_elevation)));
            }
            oracle += p.gain * std::exp(cd(0, -2 * kPi * f * p.delay)) * ar * at.adjoint();
        }
        CHECK((channel_matrix(paths, f, tx, rx) - oracle).norm() <= 1e-12 * oracle.norm());
        // A reference delay only rotates the whole matrix
        const double tau0 = paths[0].delay;
        const CMat shifted = channel_matrix(paths, f, tx, rx, tau0);
        CHECK((shifted - std::exp(cd(0, 2 * kPi * f * tau0)) * oracle).norm() <= 1e-9 * oracle.norm());
    }
    CHECK_THROWS_AS(channel_matrix({}, 28e9, tx, rx), std::invalid_argument);
}

TEST_CASE("SVD targets")
{
    CMat G = CMat::Zero(2, 2);
    G(0, 0) = 3;
    G(1, 1) = 1;
    CHECK(svd_targets(G, 1).target[0] == doctest::Approx(3.0));
    const auto id = svd_targets(CMat::Identity(2, 2), 2);
    CHECK((id.target.array() - 1.0).abs().maxCoeff() < 1e-15);

    std::mt19937_64 rng(6);
    for (int k = 0; k < 10; ++k)
    {
        const CMat R = test::random_matrix(6, 6, rng);
        const auto t = svd_targets(R, 3);
        // Oracle: square roots of the eigenvalues of G G^H
        Eigen::SelfAdjointEigenSolver<CMat> eig(R * R.adjoint());
        for (int s = 0; s < 3; ++s)
            CHECK(t.target[s] == doctest::Approx(std::sqrt(eig.eigenvalues()[5 - s])).epsilon(1e-9));
        for (int s = 1; s < 6; ++s)
            CHECK(t.singular_values[s] <= t.singular_values[s - 1]);
        CHECK((t.E.adjoint() * t.E - CMat::Identity(6, 6)).norm() < 1e-10);
        CHECK((t.F.adjoint() * t.F - CMat::Identity(6, 6)).norm() < 1e-10);
        CHECK((t.E * t.singular_values.cast<cd>().asDiagonal() * t.F.adjoint() - R).norm() < 1e-10 * R.norm());
        // Reference combiner and precoder diagonalize the channel onto the target
        const CMat D = t.combiner() * R * t.precoder();
        CHECK((D - CMat(t.target.cast<cd>().asDiagonal())).norm() < 1e-9 * t.target.norm());
    }
    CHECK_THROWS(svd_targets(CMat::Identity(2, 2), 3));
}

TEST_CASE("frequency enters only through the wavenumber and delays")
{
    auto cfg = default_stack(1, 2, 2, 1, 28e9);
    const auto tx = build_stack_geometry(cfg, Vec3::Zero(), 1);
    const auto rx = build_stack_geometry(cfg, Vec3(0, 250, 0), -1);
    Scatterer s;
    s.gain = cd(0.3, 0.1);
    s.tx_elevation = 0.9;
    s.rx_elevation = 2.1;
    const double n0 = channel_matrix({s}, 28e9, tx, rx).norm();
    for (double f : {27.5e9, 28.2e9, 29e9})
        CHECK(channel_matrix({s}, f, tx, rx).norm() == doctest::Approx(n0).epsilon(1e-13));
}

TEST_CASE("scatterer JSON round trip")
{
    std::mt19937_64 rng(1);
    const auto paths = draw_scatterers(rng, 5, Vec3::Zero(), Vec3(0, 250, 0), {}, {wavelength(28e9), 2, 1});
    const auto back = scatterers_from_json(scatterers_to_json(paths));
    REQUIRE(back.size() == paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p)
    {
        CHECK(back[p].gain == paths[p].gain);
        CHECK(back[p].delay == paths[p].delay);
        CHECK(back[p].position == paths[p].position);
        CHECK(back[p].type == paths[p].type);
    }
}

TEST_CASE("subcarrier contexts carry consistent data")
{
    auto sys = test::small_system(3, 2, 2, 2, 2, 4);
    REQUIRE(sys.contexts.size() == 4);
    const auto freqs = sys.band.frequencies();
    for (std::size_t i = 0; i < 4; ++i)
    {
        const auto &c = sys.contexts[i];
        CHECK(c.frequency == freqs[i]);
        CHECK(c.wavenumber == doctest::Approx(wavenumber(freqs[i])));
        CHECK(c.target().size() == 2);
        CHECK(c.G.rows() == 4);
        CHECK((channel_matrix(sys.scatterers, c.frequency, sys.tx, sys.rx, sys.reference_delay) - c.G).norm() == 0.0);
    }
}
