#include "mass_lab/errors.hpp"
#include "mass_lab/mass_functionals.hpp"

#include <doctest.h>

#include <cmath>

using namespace mass_lab;

namespace {

Metric flat_ball() { return make_conformally_flat([](double) { return Jet{1.0, 0.0, 0.0}; }, "flat ball", 1.0); }

// The interface sits at r = max(1, m): for m = 2 the sphere r = 1 is the horizon.
std::shared_ptr<const GluedMetric> schwarzschild_on_ball(double m) {
    return make_glued(make_schwarzschild(m), flat_ball(), std::max(1.0, m));
}

}  // namespace

TEST_CASE("bulk integral vanishes for linear fields") {
    const HarmonicField u = solve_asymptotic(make_flat(), InnerCondition::none());
    const BulkResult b = bulk_integral(u, Region::exterior);
    CHECK(std::abs(b.value) < 1e-12);
    CHECK_FALSE(b.divergent);
    CHECK_THROWS_AS((void)bulk_integral(u, Region::fillin), PreconditionError);
}

TEST_CASE("bulk integrals of the Schwarzschild transmission solve") {
    const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(1.0), InnerCondition::transmission());
    const BulkResult in = bulk_integral(u, Region::fillin);
    CHECK(std::abs(in.value) < 1e-10);
    const BulkResult out = bulk_integral(u, Region::exterior);
    CHECK(std::abs(out.value - 8.0 * pi) < 0.25);
    CHECK(out.error_estimate < 1e-6);
    MESSAGE("exterior bulk " << out.value << " error " << out.error_estimate);
    const BulkResult both = bulk_integral(u, Region::both);
    CHECK(both.value == doctest::Approx(in.value + out.value).epsilon(1e-12));
}

TEST_CASE("boundary terms of x_1 on the unit sphere") {
    const HarmonicField u = solve_asymptotic(make_flat(), InnerCondition::none());
    const BoundaryTerms b = boundary_terms(u, SurfaceModel::coordinate_sphere(1.0), Side::exterior);
    CHECK(b.H_term == doctest::Approx(-8.0 * pi).epsilon(1e-12));
    CHECK(b.angle_term == doctest::Approx(4.0 * pi).epsilon(1e-9));
    CHECK(b.area == doctest::Approx(4.0 * pi).epsilon(1e-12));
    CHECK(b.excluded == 0);
    CHECK(b.max_form_difference < 1e-8);
    for (const AngleTermSample& s : b.samples) {
        CHECK(s.beta >= -pi / 2);
        CHECK(s.beta <= pi / 2);
        // beta = pi/2 - (angle from the x_1 axis)
        CHECK(std::abs(s.beta - (pi / 2 - std::acos(s.point[0]))) < 1e-12);
    }
}

TEST_CASE("Neumann data gives a vanishing angle term") {
    const HarmonicField u = solve_asymptotic(make_schwarzschild(1.0), InnerCondition::neumann(1.0));
    const BoundaryTerms b = boundary_terms(u, SurfaceModel::coordinate_sphere(1.0), Side::exterior);
    for (const AngleTermSample& s : b.samples) CHECK(std::abs(s.beta) < 1e-9);
    CHECK(std::abs(b.angle_term) < 1e-8);
}

TEST_CASE("angle and surface forms agree on non-spherical surfaces") {
    const HarmonicField u = solve_asymptotic(make_schwarzschild(1.0), InnerCondition::dirichlet(1.0));
    const BoundaryTerms b = boundary_terms(u, SurfaceModel::scaled(SurfaceModel::ellipsoid(1.5, 2.0), 1.0),
                                           Side::exterior, {24, 24});
    CHECK(b.max_form_difference < 1e-8);
    double quadrature = 0.0;
    for (const AngleTermSample& s : b.samples) quadrature += s.surface_form_integrand * s.area_weight;
    CHECK(quadrature == doctest::Approx(b.angle_term).epsilon(1e-8));
}

TEST_CASE("angle terms from both sides of the interface coincide") {
    const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(1.0), InnerCondition::transmission());
    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(1.0);
    const BoundaryTerms ext = boundary_terms(u, sigma, Side::exterior);
    const BoundaryTerms in = boundary_terms(u, sigma, Side::interior);
    CHECK(std::abs(ext.angle_term - in.angle_term) < 1e-8);
    // |grad u| = 1/3 on the interface; H = 8/27 and H_Omega = 8/9 on an area 4 pi (9/4)^2.
    const double area = 4.0 * pi * 81.0 / 16.0;
    CHECK(ext.H_term == doctest::Approx(-(8.0 / 27.0) / 3.0 * area).epsilon(1e-9));
    CHECK(in.H_term == doctest::Approx(-(8.0 / 9.0) / 3.0 * area).epsilon(1e-9));
}

TEST_CASE("Euler characteristic deficit of level sets") {
    const HarmonicField x1 = solve_asymptotic(make_flat(), InnerCondition::none());
    const LevelSetDeficit whole = level_set_deficit(x1);
    for (long chi : whole.chi) CHECK(chi == 1);
    CHECK(whole.deficit == 0.0);

    DeficitOptions holed;
    holed.surface_radius = 1.0;
    const LevelSetDeficit d = level_set_deficit(x1, holed);
    for (long chi : d.chi) CHECK(chi == 0);
    for (bool s : d.skipped) CHECK_FALSE(s);
    CHECK(d.deficit == doctest::Approx(-4.0 * pi).epsilon(1e-12));
    CHECK(d.T == doctest::Approx(1.0).epsilon(1e-3));

    const HarmonicField glued = solve_asymptotic(schwarzschild_on_ball(1.0), InnerCondition::transmission());
    const LevelSetDeficit g = level_set_deficit(glued);
    for (long chi : g.chi) CHECK(chi == 1);
    CHECK(g.deficit == 0.0);
}

TEST_CASE("boundary mass identity for x_1 outside the unit ball") {
    const HarmonicField u = solve_asymptotic(make_flat(), InnerCondition::none());
    const BoundaryInequalityReport r = verify_boundary_inequality(u, SurfaceModel::coordinate_sphere(1.0));
    CHECK(r.lhs == doctest::Approx(-4.0 * pi).epsilon(1e-9));
    CHECK(r.rhs == doctest::Approx(-4.0 * pi).epsilon(1e-9));
    CHECK(std::abs(r.residual) < 1e-8);
}

TEST_CASE("boundary mass inequality for Neumann data on Schwarzschild") {
    const HarmonicField u = solve_asymptotic(make_schwarzschild(1.0), InnerCondition::neumann(1.0));
    const BoundaryInequalityReport r = verify_boundary_inequality(u, SurfaceModel::coordinate_sphere(1.0));
    MESSAGE("lhs " << r.lhs << " rhs " << r.rhs);
    CHECK(r.residual >= -1e-3);
    CHECK(std::abs(r.angle_term) < 1e-8);
}

TEST_CASE("fill-in mass inequality is an equality for Schwarzschild on a ball") {
    for (double m : {0.5, 1.0, 2.0}) {
        const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(m), InnerCondition::transmission());
        const FillinInequalityReport r = verify_fillin_inequality(u);
        MESSAGE("m=" << m << " residual " << r.residual << " corner " << r.corner_term);
        CHECK(r.equality_expected);
        CHECK(r.passed);
        CHECK(std::abs(r.residual) / m < 1e-3);
        CHECK(r.mass == doctest::Approx(m).epsilon(1e-10));
        CHECK(std::abs(r.bulk_fillin) < 1e-9);
        CHECK(std::abs(r.angle_term - r.angle_term_fillin) < 1e-8);
        if (m == 1.0) {
            CHECK(r.corner_term == doctest::Approx(0.5).epsilon(1e-8));
            CHECK(r.bulk_exterior / (16.0 * pi) == doctest::Approx(0.5).epsilon(1e-4));
        }
    }
    const HarmonicField flat = solve_asymptotic(make_glued(make_flat(), flat_ball(), 1.0), InnerCondition::transmission());
    const FillinInequalityReport f = verify_fillin_inequality(flat);
    CHECK(std::abs(f.residual) < 1e-10);
    CHECK(std::abs(f.corner_term) < 1e-12);
    CHECK(f.passed);
    CHECK_THROWS_AS((void)verify_fillin_inequality(solve_asymptotic(make_flat(), InnerCondition::none())), PreconditionError);
}

TEST_CASE("pointwise vector-field conditions") {
    const auto glued = schwarzschild_on_ball(1.0);
    const VectorFieldConditionsReport ok =
        verify_vector_field_conditions(*glued, VectorFieldModel::zero(), VectorFieldModel::zero(), 2.0 / 3.0, 2.0 / 3.0, 500);
    CHECK(ok.fillin.passed);
    CHECK(ok.exterior.passed);
    CHECK(ok.boundary.passed);
    CHECK(std::abs(ok.exterior.margin) < 1e-8);
    CHECK(ok.boundary.margin == doctest::Approx(16.0 / 27.0).epsilon(1e-9));
    CHECK(ok.nonnegative_mass_implied);

    // Y = 3 grad(r^-2) violates R >= C2 |Y|^2 - 2 div Y for r^2 < 3 C2.
    const VectorFieldModel Y(
        [](const Vec3& x) {
            const double r = x.norm();
            return Vec3(-6.0 * x / std::pow(r, 4));
        },
        3.0, "3 grad r^-2");
    const auto flat = make_glued(make_flat(), flat_ball(), 1.0);
    const VectorFieldConditionsReport bad = verify_vector_field_conditions(*flat, VectorFieldModel::zero(), Y, 2.0 / 3.0, 2.0 / 3.0, 2000);
    CHECK_FALSE(bad.exterior.passed);
    CHECK(bad.exterior.witness.norm() < std::sqrt(2.0));
    CHECK_FALSE(bad.nonnegative_mass_implied);
    CHECK_FALSE(bad.decay_warning);

    const VectorFieldConditionsReport weak =
        verify_vector_field_conditions(*glued, VectorFieldModel::zero(), VectorFieldModel::zero(), 0.5, 2.0 / 3.0, 100);
    CHECK_FALSE(weak.constants_valid);
    CHECK_FALSE(weak.nonnegative_mass_implied);
}

TEST_CASE("Robin-corrected mass bound") {
    const RobinReport flat = robin_mass_bound(make_flat(), 1.0);
    CHECK(flat.solution.coefficient == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(flat.bulk) < 1e-8);
    CHECK(std::abs(flat.boundary) < 1e-9);
    CHECK(std::abs(flat.bound) < 1e-9);

    const RobinReport schw = robin_mass_bound(make_schwarzschild(1.0), 1.0);
    MESSAGE("Schwarzschild bound " << schw.bound << " mass " << schw.mass);
    CHECK(schw.bound <= schw.mass + 1e-6);
}
