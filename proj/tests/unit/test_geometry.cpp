// SPDX-License-Identifier: Apache-2.0

#include "simbf/geometry.hpp"

#include <doctest.h>

#include <random>

using namespace simbf;

namespace
{
    StackConfig stack(int layers, int ax, int az, double spacing, double thickness)
    {
        StackConfig s;
        s.num_layers = layers;
        s.atoms_x = ax;
        s.atoms_z = az;
        s.atom_spacing = spacing;
        s.total_thickness = thickness;
        s.atom_area = 1e-6;
        s.num_antennas = 2;
        s.antenna_spacing = 0.004;
        return s;
    }
}

TEST_CASE("one-atom layer sits on the axis at the full thickness")
{
    const double lambda = wavelength(28e9);
    const auto g = build_stack_geometry(stack(1, 1, 1, lambda / 2, 0.05), Vec3::Zero(), +1);
    REQUIRE(g.num_layers() == 1);
    CHECK(g.position(1, 0).x() == doctest::Approx(0.0));
    CHECK(g.position(1, 0).y() == doctest::Approx(0.05));
    CHECK(g.position(1, 0).z() == doctest::Approx(0.0));
}

TEST_CASE("layer planes are spaced by D / L along the signed axis")
{
    const auto g = build_stack_geometry(stack(2, 2, 1, 0.005, 0.05), Vec3(0, 250, 0), -1);
    for (int m = 0; m < g.num_atoms(); ++m)
    {
        CHECK(g.position(1, m).y() == doctest::Approx(250 - 0.025));
        CHECK(g.position(2, m).y() == doctest::Approx(250 - 0.05));
    }
}

TEST_CASE("full-size stack matches coordinate arithmetic")
{
    const double lambda = wavelength(28e9), r = lambda / 2, D = 0.05;
    const auto g = build_stack_geometry(stack(7, 10, 10, r, D), Vec3::Zero(), +1);
    REQUIRE(g.num_layers() == 7);
    REQUIRE(g.num_atoms() == 100);
    // Oracle: atom m = mx * Mz + mz at ((mx - 4.5) r, l D / 7, (mz - 4.5) r)
    for (int l = 1; l <= 7; ++l)
        for (int m = 0; m < 100; ++m)
        {
            const Vec3 expect((m / 10 - 4.5) * r, l * D / 7, (m % 10 - 4.5) * r);
            CHECK((g.position(l, m) - expect).norm() < 1e-15);
        }
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, 99);
    for (int k = 0; k < 50; ++k)
    {
        const int a = pick(rng), b = pick(rng);
        const double dx = (a / 10 - b / 10) * r, dz = (a % 10 - b % 10) * r;
        CHECK((g.position(3, a) - g.position(3, b)).norm() == doctest::Approx(std::hypot(dx, dz)).epsilon(1e-12));
    }
}

TEST_CASE("inter-layer distances")
{
    const double p = 0.005, D = 0.03;
    const auto g = build_stack_geometry(stack(3, 3, 2, p, D), Vec3::Zero(), +1);
    const double d = D / 3;
    SUBCASE("aligned atoms are exactly d apart")
    {
        for (int m = 0; m < g.num_atoms(); ++m)
            CHECK(inter_layer_distance(g, 1, m, 2, m) == doctest::Approx(d).epsilon(1e-14));
    }
    SUBCASE("one pitch in x gives the Pythagorean distance")
    {
        // atom 0 = (0, 0), atom 2 = (1, 0)
        CHECK(inter_layer_distance(g, 2, 0, 3, 2) == doctest::Approx(std::hypot(d, p)).epsilon(1e-14));
    }
    SUBCASE("bounded below by d and symmetric")
    {
        for (int l = 0; l < 3; ++l)
            for (int a = 0; a < g.planes[l].cols(); ++a)
                for (int b = 0; b < g.num_atoms(); ++b)
                {
                    const double t = inter_layer_distance(g, l, a, l + 1, b);
                    CHECK(t >= d * (1 - 1e-14));
                    CHECK(t == inter_layer_distance(g, l + 1, b, l, a));
                }
    }
    SUBCASE("out-of-range indices throw")
    {
        CHECK_THROWS_AS(inter_layer_distance(g, 0, 0, 4, 0), std::out_of_range);
        CHECK_THROWS_AS(inter_layer_distance(g, 1, 6, 2, 0), std::out_of_range);
    }
}

TEST_CASE("grids are centered and antennas lie on a centered line")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> n(1, 6);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Vec3 origin(0.3 * trial, -1.0, 2.0);
        const auto g = build_stack_geometry(stack(n(rng), n(rng), n(rng), 0.005, 0.05), origin, trial % 2 ? 1 : -1);
        for (int l = 1; l <= g.num_layers(); ++l)
        {
            const Vec3 mean = g.planes[l].rowwise().mean();
            CHECK((mean - g.layer_center(l)).norm() < 1e-12);
            CHECK((g.planes[l].row(1).array() - g.layer_center(l).y()).abs().maxCoeff() < 1e-12);
        }
        CHECK((g.planes[0].rowwise().mean() - origin).norm() < 1e-12);
        CHECK((g.planes[0].row(1).array() - origin.y()).abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("grid index mapping and truncation")
{
    auto cfg = stack(1, 3, 4, 0.005, 0.05);
    auto g = build_stack_geometry(cfg, Vec3::Zero(), 1);
    for (int m = 0; m < 12; ++m)
        CHECK(g.grid[m] == std::pair<int, int>(m / 4, m % 4));
    cfg.active_atoms = 7;
    g = build_stack_geometry(cfg, Vec3::Zero(), 1);
    CHECK(g.num_atoms() == 7);
    CHECK(g.grid.back() == std::pair<int, int>(1, 2));
}

TEST_CASE("invalid configurations are rejected")
{
    auto cfg = stack(0, 2, 2, 0.005, 0.05);
    CHECK_THROWS_AS(build_stack_geometry(cfg, Vec3::Zero(), 1), std::invalid_argument);
    cfg = stack(1, 2, 2, 0.005, 0.0);
    CHECK_THROWS_AS(build_stack_geometry(cfg, Vec3::Zero(), 1), std::invalid_argument);
    cfg = stack(1, 2, 2, 0.005, 0.05);
    CHECK_THROWS_AS(build_stack_geometry(cfg, Vec3::Zero(), 0), std::invalid_argument);
}
