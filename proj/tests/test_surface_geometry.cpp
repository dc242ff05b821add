#include "mass_lab/errors.hpp"
#include "mass_lab/surface_geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace mass_lab;

TEST_CASE("unit sphere in flat space") {
    const SurfaceModel s = SurfaceModel::coordinate_sphere(1.0);
    const Metric flat = make_flat();
    for (double t : {0.3, 1.2, 2.9}) {
        const FundamentalForms f = fundamental_forms(s, *flat, t, 0.7);
        CHECK(f.H == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(f.K == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.kappa1 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.kappa2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((f.normal - f.point).norm() < 1e-14);
    }
}

TEST_CASE("coordinate sphere in Schwarzschild") {
    // H = phi^-2 (2/r + 4 phi'/phi) with phi(1) = 3/2, phi'(1) = -1/2.
    const FundamentalForms f =
        fundamental_forms(SurfaceModel::coordinate_sphere(1.0), *make_schwarzschild(1.0), 0.8, 2.0);
    CHECK(f.H == doctest::Approx(8.0 / 27.0).epsilon(1e-12));
    // Intrinsic curvature of a round sphere of area radius 9/4.
    CHECK(f.K == doctest::Approx(16.0 / 81.0).epsilon(1e-10));
}

TEST_CASE("ellipsoid principal curvatures against differencing of the parametrization") {
    const double a = 1.0, c = 2.0;
    const SurfaceModel e = SurfaceModel::ellipsoid(a, c);
    const Metric flat = make_flat();
    // Meridian curvature of the profile curve by finite differences of X.
    auto meridian = [&](double t) {
        const double h = 1e-4;
        auto X = [&](double s) { return e.eval(s, 0.0).x; };
        const Vec3 d1 = (X(t + h) - X(t - h)) / (2 * h);
        const Vec3 d2 = (X(t + h) - 2 * X(t) + X(t - h)) / (h * h);
        return d1.cross(d2).norm() / std::pow(d1.norm(), 3);
    };
    const FundamentalForms pole = fundamental_forms(e, *flat, regular_theta(0.0), 0.0);
    CHECK(pole.kappa1 == doctest::Approx(meridian(1e-3)).epsilon(1e-5));
    CHECK(pole.kappa1 == doctest::Approx(c / (a * a)).epsilon(1e-8));
    CHECK(pole.kappa2 == doctest::Approx(c / (a * a)).epsilon(1e-8));
    const FundamentalForms eq = fundamental_forms(e, *flat, pi / 2, 0.3);
    CHECK(eq.kappa1 == doctest::Approx(a / (c * c)).epsilon(1e-12));
    CHECK(eq.kappa1 == doctest::Approx(meridian(pi / 2)).epsilon(1e-6));
    CHECK(eq.kappa2 == doctest::Approx(1.0 / a).epsilon(1e-12));
    CHECK(eq.H == doctest::Approx(eq.kappa1 + eq.kappa2).epsilon(1e-14));
    CHECK(eq.K == doctest::Approx(eq.kappa1 * eq.kappa2).epsilon(1e-12));
}

TEST_CASE("poles without an offset are degenerate") {
    CHECK_THROWS_AS(fundamental_forms(SurfaceModel::coordinate_sphere(1.0), *make_flat(), 0.0, 0.0),
                    SingularityError);
}

TEST_CASE("mean curvature scales inversely") {
    const SurfaceModel base = SurfaceModel::ellipsoid(1.0, 2.0);
    const Metric flat = make_flat();
    for (double r : {0.5, 3.0, 10.0}) {
        const SurfaceModel big = SurfaceModel::scaled(base, r);
        for (double t : {0.4, 1.5}) {
            const double h0 = fundamental_forms(base, *flat, t, 1.0).H;
            const double h1 = fundamental_forms(big, *flat, t, 1.0).H;
            CHECK(std::abs(h1 - h0 / r) < 1e-12);
        }
    }
}

TEST_CASE("one-sided forms on a glued interface") {
    const auto glued = make_glued(make_schwarzschild(1.0), make_flat(), 1.0);
    const SurfaceModel s = SurfaceModel::coordinate_sphere(1.0);
    for (double t : {0.2, 1.1, 2.5}) {
        const FundamentalForms out = fundamental_forms(s, *glued, t, 0.4, Side::exterior);
        const FundamentalForms in = fundamental_forms(s, *glued, t, 0.4, Side::interior);
        CHECK((out.first - in.first).norm() < 1e-10);
        CHECK(out.H == doctest::Approx(8.0 / 27.0).epsilon(1e-12));
        CHECK(in.H == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    }
}

TEST_CASE("principal bounds of rescaled families") {
    const PrincipalBounds spheres = principal_bounds(SurfaceFamily::coordinate_spheres(), 7.0, 0.1, 10.0, 32);
    CHECK(spheres.min_kappa == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spheres.max_kappa == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spheres.satisfies);
    for (double r : {1.0, 10.0, 100.0}) {
        const PrincipalBounds e =
            principal_bounds(SurfaceFamily::scaled(SurfaceModel::ellipsoid(1.0, 2.0)), r, 0.1, 10.0);
        CHECK(e.min_kappa == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(e.max_kappa == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(e.satisfies);
    }
    const PrincipalBounds d = principal_bounds(SurfaceFamily::scaled(SurfaceModel::dumbbell(0.3)), 1.0, 0.01, 100.0, 64);
    CHECK(d.min_kappa <= 0.0);
    CHECK_FALSE(d.satisfies);
}

TEST_CASE("rescaled surfaces") {
    const SurfaceModel unit = rescale_surface(SurfaceFamily::coordinate_spheres(), 5.0);
    CHECK((unit.eval(0.7, 1.1).x - SurfaceModel::coordinate_sphere(1.0).eval(0.7, 1.1).x).norm() < 1e-15);
    const SurfaceModel e = rescale_surface(SurfaceFamily::scaled(SurfaceModel::ellipsoid(1.0, 2.0)), 3.0);
    CHECK((e.eval(0.7, 1.1).x - SurfaceModel::ellipsoid(1.0, 2.0).eval(0.7, 1.1).x).norm() < 1e-15);
}

TEST_CASE("profile file surfaces") {
    const std::string path = "test_profile_sphere.txt";
    {
        std::ofstream out(path);
        out << "# theta r\n";
        for (int i = 0; i <= 64; ++i) out << (pi * i / 64) << " " << 2.0 << "\n";
    }
    const SurfaceModel p = SurfaceModel::from_profile_file(path);
    const FundamentalForms f = fundamental_forms(p, *make_flat(), 1.0, 0.0);
    CHECK(f.H == doctest::Approx(1.0).epsilon(1e-12));
    // Division by a scale is exact.
    const SurfaceModel small = rescale_surface(SurfaceFamily{[&](double) { return p; }, "file"}, 10.0);
    for (double t : {0.3, 1.9}) {
        const Vec3 a = p.eval(t, 0.5).x, b = small.eval(t, 0.5).x;
        for (int k = 0; k < 3; ++k) CHECK(b[k] == a[k] / 10.0);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(SurfaceModel::from_profile_file("does-not-exist.txt"), ArgumentError);
}

TEST_CASE("Gauss-Bonnet on quadrature grids matches the triangulation") {
    const long chi = euler_characteristic(surface_mesh(SurfaceModel::ellipsoid(1.0, 2.0), 16, 24));
    CHECK(chi == 2);
    const struct {
        SurfaceModel s;
        Metric m;
    } cases[] = {{SurfaceModel::ellipsoid(1.0, 2.0), make_flat()},
                 {SurfaceModel::dumbbell(0.5), make_flat()},
                 {SurfaceModel::ellipsoid(2.0, 1.0), make_schwarzschild(1.0)},
                 {SurfaceModel::coordinate_sphere(1.5), make_conformally_flat(bump_factor(1.0, 0.01, 3.0, 1.0), "bump", 1.0, 0.0, false)}};
    for (const auto& c : cases) {
        const SurfaceTotals t = surface_totals(c.s, *c.m, 96, 32);
        CHECK_MESSAGE(std::abs(t.gauss_bonnet - chi) < 1e-3, c.s.describe());
    }
}

TEST_CASE("Euler characteristics of reference meshes") {
    CHECK(euler_characteristic(icosphere_mesh(2)) == 2);
    CHECK(euler_characteristic(torus_mesh(2.0, 0.5, 24, 12)) == 0);
    const LevelSetMesh ann = annulus_mesh(1.0, 2.0, 3, 16);
    CHECK(euler_characteristic(ann) == 0);
    CHECK(mesh_counts(ann).boundary_loops == 2);
    LevelSetMesh bad = icosphere_mesh(0);
    bad.faces.push_back(bad.faces.front());
    CHECK_THROWS_AS(euler_characteristic(bad), MeshError);
}

TEST_CASE("marching tetrahedra level sets") {
    const Vec3 lo(-2.5, -2.5, -2.5), hi(2.5, 2.5, 2.5);
    const ScalarGrid plane = sample_grid([](const Vec3& x) { return x.x(); }, lo, hi, 24);
    const ScalarGrid outside = sample_grid([](const Vec3& x) { return x.norm() - 1.0; }, lo, hi, 24);
    for (double t : {-0.77, 0.0, 0.31}) {
        const LevelSetMesh disk = extract_level_set(plane, nullptr, t);
        CHECK(euler_characteristic(disk) == 1);
        const LevelSetMesh ann = extract_level_set(plane, &outside, t);
        CHECK(euler_characteristic(ann) == 0);
        CHECK(mesh_counts(ann).boundary_loops == 2);
    }
    CHECK(euler_characteristic(extract_level_set(plane, &outside, 1.6)) == 1);
    const LevelSetMesh sphere = extract_level_set(outside, nullptr, 0.2);
    CHECK(euler_characteristic(sphere) == 2);
    const ScalarGrid torus = sample_grid(
        [](const Vec3& x) {
            const double q = std::hypot(x.x(), x.y()) - 1.5;
            return q * q + x.z() * x.z();
        },
        lo, hi, 40);
    CHECK(euler_characteristic(extract_level_set(torus, nullptr, 0.25)) == 0);
}
