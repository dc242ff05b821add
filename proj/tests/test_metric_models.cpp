#include "mass_lab/errors.hpp"
#include "mass_lab/metric_models.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mass_lab;

namespace {

Vec3 random_point(std::mt19937_64& rng, double rmin, double rmax) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(rmin, rmax);
    Vec3 d(n(rng), n(rng), n(rng));
    return u(rng) * d.normalized();
}

// Fourth-order flat Laplacian by differencing, used as an oracle.
template <class F>
double fd_laplacian(F f, const Vec3& x, double h) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Vec3 e = h * Vec3::Unit(k);
        sum += (-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x) + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h);
    }
    return sum;
}

}  // namespace

TEST_CASE("Schwarzschild has vanishing scalar curvature") {
    const Metric m = make_schwarzschild(1.0);
    CHECK(std::abs(scalar_curvature(*m, Vec3(3.0, 0.0, 0.0))) < 1e-10);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x = random_point(rng, 0.6, 50.0);
        const GeometrySample g = geometry_at(*m, x);
        CHECK(std::abs(g.scalar_curvature) < 1e-10);
    }
}

TEST_CASE("conformal bump curvature matches the conformal Laplacian oracle") {
    const Metric m = make_conformally_flat(bump_factor(1.0, 0.01, 3.0, 1.0), "bump", 1.0, 0.0, false);
    auto phi = [](const Vec3& x) {
        const double r = x.norm();
        return 1.0 + 1.0 / (2.0 * r) + 0.01 * std::exp(-(r - 3.0) * (r - 3.0));
    };
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const Vec3 x = random_point(rng, 1.0, 6.0);
        const double oracle = -8.0 * std::pow(phi(x), -5.0) * fd_laplacian(phi, x, 1e-2);
        CHECK(std::abs(scalar_curvature(*m, x) - oracle) < 1e-6);
    }
}

TEST_CASE("Schwarzschild chart excludes r <= m/2") {
    const Metric m = make_schwarzschild(1.0);
    CHECK_THROWS_AS(geometry_at(*m, Vec3(0.5, 0.0, 0.0)), DomainError);
    CHECK_THROWS_AS(geometry_at(*m, Vec3(0.1, 0.2, 0.0)), DomainError);
    CHECK_NOTHROW(geometry_at(*m, Vec3(0.51, 0.0, 0.0)));
}

TEST_CASE("every catalog model is symmetric positive definite") {
    std::vector<Metric> models{
        make_flat(),
        make_schwarzschild(1.0),
        make_conformally_flat(bump_factor(1.0, 0.01, 3.0, 1.0), "bump", 1.0, 0.0, false),
        make_conformally_flat(power_factor(1.0, 0.6), "power", 0.6, 0.0, false),
        make_spherically_symmetric(power_coefficient(0.5, 1.0), power_coefficient(-0.2, 2.0), "ab", 1.0, 1.0,
                                   false),
        make_sphere_cap(2.0),
        make_glued(make_schwarzschild(1.0), make_flat(), 1.0),
    };
    std::mt19937_64 rng(3);
    for (const Metric& m : models) {
        int failures = 0;
        for (int i = 0; i < 10000; ++i) {
            const Vec3 x = random_point(rng, 1.01, 40.0);
            const Mat3 g = m->jet(x).g;
            if ((g - g.transpose()).norm() > 1e-14 * g.norm()) ++failures;
            if (Eigen::SelfAdjointEigenSolver<Mat3>(g).eigenvalues().minCoeff() <= 0.0) ++failures;
        }
        CHECK_MESSAGE(failures == 0, m->describe());
    }
}

TEST_CASE("analytic and differenced derivatives agree at second order") {
    std::vector<Metric> models{
        make_schwarzschild(1.0),
        make_conformally_flat(bump_factor(1.0, 0.01, 3.0, 1.0), "bump", 1.0, 0.0, false),
        make_spherically_symmetric(power_coefficient(0.5, 1.0), power_coefficient(-0.2, 2.0), "ab", 1.0, 1.0,
                                   false),
    };
    const Vec3 x(1.3, -0.7, 2.1);
    for (const Metric& m : models) {
        const GeometrySample exact = geometry_at(*m, x);
        auto err = [&](double h) {
            return std::abs(geometry_at(*m, x, Side::exterior, DerivativeMode::finite_difference, h).scalar_curvature -
                            exact.scalar_curvature);
        };
        const double e1 = err(0.04), e2 = err(0.02);
        CHECK_MESSAGE(e1 / e2 >= 3.5, m->describe());
        // Default step is accurate in absolute terms.
        const GeometrySample fd = geometry_at(*m, x, Side::exterior, DerivativeMode::finite_difference);
        CHECK(std::abs(fd.scalar_curvature - exact.scalar_curvature) < 1e-6);
    }
}

TEST_CASE("radial jet second derivatives match differencing") {
    const Metric m = make_spherically_symmetric(power_coefficient(0.5, 1.0), power_coefficient(-0.2, 2.0), "ab", 1.0,
                                                1.0, false);
    const Vec3 x(1.1, 0.4, -1.7);
    const MetricJet a = m->jet(x);
    const MetricJet f = finite_difference_jet(*m, x, Side::exterior, 1e-4);
    for (int k = 0; k < 3; ++k) {
        CHECK((a.dg[k] - f.dg[k]).norm() < 1e-8);
        for (int l = 0; l < 3; ++l) CHECK((a.ddg[k][l] - f.ddg[k][l]).norm() < 1e-6);
    }
}

TEST_CASE("warped-product curvature oracle for A dr^2 + B r^2 dOmega^2") {
    // R = 2 (1 - W_t^2) / W^2 - 4 W_tt / W with W = r sqrt(B), dt = sqrt(A) dr.
    auto A = [](double r) { return 1.0 + 0.5 / r; };
    auto B = [](double r) { return 1.0 - 0.2 / (r * r); };
    const Metric m = make_spherically_symmetric(power_coefficient(0.5, 1.0), power_coefficient(-0.2, 2.0), "ab", 1.0,
                                                1.0, false);
    for (double r : {1.5, 2.0, 4.0}) {
        const double h = 1e-3;
        auto W = [&](double s) { return s * std::sqrt(B(s)); };
        auto Wt = [&](double s) { return (W(s + h) - W(s - h)) / (2 * h) / std::sqrt(A(s)); };
        const double w = W(r), wt = Wt(r);
        const double wtt = (Wt(r + h) - Wt(r - h)) / (2 * h) / std::sqrt(A(r));
        const double oracle = 2 * (1 - wt * wt) / (w * w) - 4 * wtt / w;
        const Vec3 x = r * Vec3(0.6, 0.0, 0.8);
        CHECK(scalar_curvature(*m, x) == doctest::Approx(oracle).epsilon(1e-5));
    }
}

TEST_CASE("round sphere cap has constant positive curvature") {
    const double a = 2.0;
    const Metric m = make_sphere_cap(a);
    for (double r : {0.0, 0.5, 1.7, 3.0})
        CHECK(scalar_curvature(*m, Vec3(r, 0.2, 0.0)) == doctest::Approx(6.0 / (a * a)).epsilon(1e-10));
}

TEST_CASE("Schwarzschild glued to a flat ball") {
    const auto glued = make_glued(make_schwarzschild(1.0), make_flat(), 1.0);
    CHECK(glued->areal_radius() == doctest::Approx(9.0 / 4.0).epsilon(1e-15));
    CHECK(glued->fillin_radius() == doctest::Approx(9.0 / 4.0).epsilon(1e-14));
    CHECK(glued->scale() == doctest::Approx(9.0 / 4.0).epsilon(1e-14));
    const Vec3 inside(0.3, 0.1, -0.2);
    CHECK((glued->jet(inside).g - (81.0 / 16.0) * Mat3::Identity()).norm() < 1e-13);
    // Collar components: dt^2 + R(t)^2 dOmega^2 from both sides.
    const Jet out = glued->warp(0.0, Side::exterior);
    const Jet in = glued->warp(0.0, Side::interior);
    CHECK(std::abs(out.v - in.v) < 1e-12);
    // First derivatives jump: R_t = H R / 2 on each side.
    CHECK(out.d1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(in.d1 == doctest::Approx(1.0).epsilon(1e-12));
    // Round trip through the collar coordinate.
    for (double r : {0.4, 0.9, 1.0, 1.5, 6.0}) {
        const Side s = r >= 1.0 ? Side::exterior : Side::interior;
        CHECK(glued->chart_radius(glued->collar_t(r, s)) == doctest::Approx(r).epsilon(1e-12));
    }
    CHECK(glued->collar_limit(Side::interior) == doctest::Approx(-9.0 / 4.0).epsilon(1e-12));
    // The chart is regular inside: curvature of a flat ball is zero.
    CHECK(std::abs(scalar_curvature(*glued, inside)) < 1e-12);
}

TEST_CASE("gluing rejects incompatible inputs") {
    CHECK_THROWS_AS(make_glued(make_schwarzschild(1.0), make_flat(), 0.4), DomainError);
    CHECK_THROWS_AS(make_glued(make_schwarzschild(1.0), make_sphere_cap(1.0), 1.0), PreconditionError);
}
