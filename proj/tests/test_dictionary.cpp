#include "doctest.h"

#include "common.hpp"
#include "xlmimo/channel.hpp"
#include "xlmimo/dictionary.hpp"

using namespace xt;

TEST_SUITE("dictionary")
{

TEST_CASE("cosine grid")
{
    const std::vector<double> g2 = cosine_grid(2);
    REQUIRE(g2.size() == 2);
    CHECK(g2[0] == -0.5);
    CHECK(g2[1] == 0.5);
    const std::vector<double> g5 = cosine_grid(5);
    CHECK(g5[2] == 0.0);
    CHECK(g5[0] == doctest::Approx(-0.8));
}

TEST_CASE("Z = 2 angular dictionary has four columns")
{
    const AngularDictionary d = build_angular(3, 4, lambda / 2, lambda / 2, lambda, 2);
    CHECK(d.size() == 4);
    CHECK(d.atoms.rows() == 12);
    CHECK(d.cosine_h(2) == 0.5);
    CHECK(d.cosine_v(2) == -0.5);
}

TEST_CASE("angular columns are Kronecker steering vectors")
{
    const int z = 7;
    const double dh = 0.6 * lambda;
    const double dv = 0.45 * lambda;
    const AngularDictionary d = build_angular(4, 5, dh, dv, lambda, z);
    for (int a = 1; a <= z; ++a)
        for (int b = 1; b <= z; ++b)
        {
            const CVec ah = far_field_steering(4, dh, (2.0 * a - z - 1) / z, lambda);
            const CVec av = far_field_steering(5, dv, (2.0 * b - z - 1) / z, lambda);
            CVec kron(20);
            for (int h = 0; h < 4; ++h)
                kron.segment(h * 5, 5) = ah(h) * av;
            CHECK((d.atoms.col((a - 1) * z + (b - 1)) - kron).norm() < 1e-13);
        }
}

TEST_CASE("angular dictionary coherence at Z = 32, 8x12")
{
    const AngularDictionary d = build_angular(8, 12, lambda / 2, lambda / 2, lambda, 32);
    const CMat normed = d.atoms.colwise().normalized();
    const CMat g = normed.adjoint() * normed;
    double worst = 0.0;
    for (Eigen::Index a = 0; a < g.rows(); ++a)
        for (Eigen::Index b = 0; b < g.cols(); ++b)
            if (a != b)
                worst = std::max(worst, std::abs(g(a, b)));
    CHECK(worst < 1.0 - 1e-9);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, d.size() - 1);
    for (int rep = 0; rep < 5; ++rep)
    {
        const int col = pick(rng);
        const CVec s = planar_far_field_steering(8, 12, lambda / 2, lambda / 2, d.cosine_h(col), d.cosine_v(col),
                                                 lambda);
        Eigen::Index best = 0;
        const double peak = (normed.adjoint() * s.normalized()).cwiseAbs().maxCoeff(&best);
        CHECK(best == col);
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single point location dictionary is vec of the LoS channel")
{
    const ArrayGeometry bs = ArrayGeometry::upa(4, 4, lambda / 2, lambda / 2, Vec3::Zero());
    const ArrayGeometry ue = ArrayGeometry::ula(2, lambda / 2, Vec3::Zero(), Vec3::UnitY());
    LocationGrid grid;
    grid.center = Vec3(6, 1, -1);
    const LocationDictionary d = build_location(grid, bs, ue, lambda);
    REQUIRE(d.size() == 1);
    const CMat h = los_channel(bs, ue.translated(grid.center), lambda);
    // column-major vec: antenna index fastest
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 16; ++m)
            CHECK(std::abs(d.atoms(n * 16 + m, 0) - h(m, n)) == 0.0);
}

TEST_CASE("full-size location grid")
{
    LocationGrid grid;
    grid.center = Vec3(8, 1, -1);
    grid.half_width = Vec3(0.2, 0.2, 0.02);
    grid.count_x = grid.count_y = 11;
    grid.count_z = 3;
    const std::vector<Vec3> pts = location_points(grid);
    CHECK(pts.size() == 363);
    // x-major ordering: consecutive x samples are 11*3 entries apart
    CHECK(pts[33].x() - pts[0].x() == doctest::Approx(0.04));
    CHECK(pts[3].y() - pts[0].y() == doctest::Approx(0.04));
    CHECK(pts[1].z() - pts[0].z() == doctest::Approx(0.02));
    CHECK((pts[181] - grid.center).norm() < 1e-14);
    CHECK((pts.front() - Vec3(7.8, 0.8, -1.02)).norm() < 1e-14);
    CHECK((pts.back() - Vec3(8.2, 1.2, -0.98)).norm() < 1e-14);
}

TEST_CASE("grid points are clamped in front of the array")
{
    LocationGrid grid;
    grid.center = Vec3(0.15, 0, 0);
    grid.half_width = Vec3(0.2, 0, 0);
    grid.count_x = 3;
    grid.min_x = 0.1;
    const std::vector<Vec3> pts = location_points(grid);
    CHECK(pts[0].x() == 0.1);
    CHECK(pts[1].x() == doctest::Approx(0.15));
}

TEST_CASE("bad location grids")
{
    LocationGrid grid;
    grid.count_x = 0;
    CHECK_THROWS_AS(location_points(grid), Error);
    grid.count_x = 3;
    try
    {
        location_points(grid);
        FAIL("expected a degenerate grid error");
    }
    catch (const Error &e)
    {
        CHECK(e.code() == ErrorCode::degenerate_grid);
    }
}

TEST_CASE("spherical dictionary")
{
    const ArrayGeometry bs = ArrayGeometry::upa(4, 6, lambda / 2, lambda / 2, Vec3::Zero());

    SUBCASE("one angle, one ring")
    {
        const SphericalDictionary d = build_spherical_baseline(bs, 1, {7.0}, lambda);
        REQUIRE(d.size() == 1);
        CHECK((d.atoms.col(0) - near_field_steering(bs, Vec3(7, 0, 0), lambda)).norm() == 0.0);
    }
    SUBCASE("column count")
    {
        const SphericalDictionary d = build_spherical_baseline(bs, 5, {3.0, 6.0, 9.0}, lambda);
        CHECK(d.size() == 75);
    }
    SUBCASE("a very distant ring is the far-field model")
    {
        const SphericalDictionary d = build_spherical_baseline(bs, 4, {1e6}, lambda);
        const cd ref = std::exp(cd(0, -2 * pi * 1e6 / lambda));
        double worst = 0.0;
        for (int c = 0; c < d.size(); ++c)
        {
            const double ky = d.grid[static_cast<size_t>(c / 4)];
            const double kz = d.grid[static_cast<size_t>(c % 4)];
            if (ky * ky + kz * kz >= 1.0)
                continue;
            const CVec ff = planar_far_field_steering(4, 6, lambda / 2, lambda / 2, ky, kz, lambda);
            for (int m = 0; m < bs.size(); ++m)
                worst = std::max(worst, phase_gap(d.atoms(m, c), ref * ff(m)));
        }
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("reciprocal rings are uniform in 1/r")
{
    const std::vector<double> r = reciprocal_rings(5, 25, 4);
    REQUIRE(r.size() == 4);
    CHECK(r.front() == doctest::Approx(5.0));
    CHECK(r.back() == doctest::Approx(25.0));
    const double step = 1 / r[1] - 1 / r[0];
    CHECK(1 / r[2] - 1 / r[1] == doctest::Approx(step));
    CHECK_THROWS_AS(reciprocal_rings(0, 1, 2), Error);
}

TEST_CASE("manifests name the dimensions")
{
    const AngularDictionary d = build_angular(2, 2, 1, 1, 2, 3);
    const std::string m = manifest(d);
    CHECK(m.find("kind angular") != std::string::npos);
    CHECK(m.find("columns 9") != std::string::npos);
}

} // TEST_SUITE
