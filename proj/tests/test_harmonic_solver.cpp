#include "mass_lab/errors.hpp"
#include "mass_lab/harmonic_solver.hpp"
#include "mass_lab/kernels.hpp"

#include <doctest.h>

#include <cmath>

using namespace mass_lab;

namespace {

// Schwarzschild harmonic functions: w harmonic iff phi w is flat-harmonic.
double schw_phi(double r, double m) { return 1.0 + m / (2.0 * r); }

Metric flat_ball() { return make_conformally_flat([](double) { return Jet{1.0, 0.0, 0.0}; }, "flat ball", 1.0); }

std::shared_ptr<const GluedMetric> schwarzschild_on_flat() {
    return make_glued(make_schwarzschild(1.0), flat_ball(), 1.0);
}

}  // namespace

TEST_CASE("transmission solution on Schwarzschild glued to a flat ball") {
    const auto glued = schwarzschild_on_flat();
    const HarmonicField u = solve_asymptotic(glued, InnerCondition::transmission());
    const RadialMode* mode = u.separated();
    REQUIRE(mode != nullptr);
    CHECK(mode->interior_slope == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(mode->dipole == doctest::Approx(1.0 / 8.0).epsilon(1e-10));

    // Exterior closed form (x_1 + b x_1 / r^3) / phi.
    for (double r : {1.0, 1.7, 4.0, 30.0, 200.0}) {
        const Vec3 x = r * Vec3(0.6, 0.0, 0.8);
        const double expected = (x[0] + 0.125 * x[0] / (r * r * r)) / schw_phi(r, 1.0);
        CHECK(u.sample(x, Side::exterior).u == doctest::Approx(expected).epsilon(1e-10));
    }
    // Interior: (1/3) x_bar_1 with x_bar = (9/4) y.
    const Vec3 y(0.3, -0.2, 0.4);
    CHECK(u.value(y) == doctest::Approx(0.75 * 0.3).epsilon(1e-10));

    const auto t = u.transmission();
    REQUIRE(t.has_value());
    CHECK(t->trace_exterior == doctest::Approx(t->trace_interior).epsilon(1e-12));
    CHECK(t->flux_exterior == doctest::Approx(t->flux_interior).epsilon(1e-10));
    CHECK(t->normal_second_interior == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("Dirichlet and Neumann exteriors in flat space") {
    const Metric flat = make_flat();
    const HarmonicField u = solve_asymptotic(flat, InnerCondition::dirichlet(1.0));
    CHECK(u.separated()->dipole == doctest::Approx(-1.0).epsilon(1e-11));
    for (double r : {1.0, 1.3, 5.0, 80.0}) {
        const Vec3 x = r * Vec3(0.48, 0.6, 0.64);
        const double rr = x.norm();
        const double expected = x[0] * (1.0 - 1.0 / (rr * rr * rr));
        CHECK(u.value(x) == doctest::Approx(expected).scale(1.0).epsilon(1e-10));
    }
    // Neumann: r + r0^3 / (2 r^2).
    const HarmonicField n = solve_asymptotic(flat, InnerCondition::neumann(2.0));
    CHECK(n.separated()->dipole == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("entire solution in flat space is x_1") {
    const HarmonicField u = solve_asymptotic(make_flat(), InnerCondition::none());
    CHECK(std::abs(u.separated()->dipole) < 1e-10);
    for (const Vec3& x : {Vec3(0.1, 0.2, 0.0), Vec3(0.7, 0.7, 0.1), Vec3(3.0, -1.0, 2.0)}) {
        CHECK(u.value(x) == doctest::Approx(x[0]).scale(1.0).epsilon(1e-10));
        CHECK((u.sample(x).grad - Vec3::UnitX()).norm() < 1e-9);
    }
}

TEST_CASE("Green function on Schwarzschild") {
    const Metric schw = make_schwarzschild(1.0);
    const HarmonicField G = solve_green(schw, SurfaceModel::coordinate_sphere(1.0));
    for (double r : {1.0, 1.5, 3.0, 40.0, 500.0}) {
        const Vec3 x = r * Vec3(0.0, 0.6, 0.8);
        CHECK(G.value(x) == doctest::Approx(3.0 / (2.0 * r + 1.0)).epsilon(1e-10));
        CHECK(G.value(x) > 0.0);
        CHECK(G.value(x) <= 1.0 + 1e-14);
    }
    CHECK(green_normal_derivative(G) == doctest::Approx(-8.0 / 27.0).epsilon(1e-10));
}

TEST_CASE("Robin coefficient") {
    struct Case {
        Metric metric;
        double r0;
        double d;
    };
    const Case cases[] = {{make_flat(), 1.0, 1.0}, {make_flat(), 2.0, 8.0}, {make_schwarzschild(1.0), 1.0, 9.0 / 8.0}};
    for (const Case& c : cases) {
        const HarmonicField G = solve_green(c.metric, SurfaceModel::coordinate_sphere(c.r0));
        const HarmonicField w = solve_asymptotic(c.metric, InnerCondition::dirichlet(c.r0));
        const RobinSolution sol = solve_robin_v(c.metric, G, w);
        CHECK(sol.coefficient == doctest::Approx(c.d).epsilon(1e-10));
        CHECK(sol.robin_residual < 1e-10);
        // u = v + w pointwise
        const Vec3 x(1.1 * c.r0, 0.4, -0.3);
        CHECK(sol.u.value(x) == doctest::Approx(sol.v.value(x) + w.value(x)).epsilon(1e-12));
    }
    const HarmonicField G = solve_green(make_schwarzschild(1.0), SurfaceModel::coordinate_sphere(1.0));
    CHECK(green_normal_derivative(G) == doctest::Approx(-8.0 / 27.0).epsilon(1e-10));
}

TEST_CASE("Laplace residual of separated solutions") {
    const Metric schw = make_schwarzschild(1.0);
    const HarmonicField u = solve_asymptotic(schw, InnerCondition::dirichlet(1.0));
    const HarmonicField G = solve_green(schw, SurfaceModel::coordinate_sphere(1.0));
    const auto glued = solve_asymptotic(schwarzschild_on_flat(), InnerCondition::transmission());
    const auto bump = make_conformally_flat(bump_factor(0.0, 0.3, 2.0, 0.5), "bump", 1.0);
    const HarmonicField ub = solve_asymptotic(bump, InnerCondition::none());
    for (const Vec3& x : {Vec3(1.2, 0.3, 0.1), Vec3(-2.0, 1.0, 0.5), Vec3(0.3, 5.0, -4.0)}) {
        CHECK(laplace_residual(u, x) < 1e-7);
        CHECK(laplace_residual(G, x) < 1e-7);
        CHECK(laplace_residual(glued, x) < 1e-7);
        CHECK(laplace_residual(ub, x) < 1e-7);
    }
    CHECK(laplace_residual(glued, Vec3(0.2, 0.3, -0.1)) < 1e-7);
    CHECK(laplace_residual(ub, Vec3(0.2, 0.3, -0.1)) < 1e-7);
}

TEST_CASE("solver preconditions") {
    const Metric schw = make_schwarzschild(1.0);
    CHECK_THROWS_AS(solve_asymptotic(schw, InnerCondition::transmission()), PreconditionError);
    CHECK_THROWS_AS(solve_asymptotic(schw, InnerCondition::none()), PreconditionError);
    CHECK_THROWS_AS(solve_asymptotic(schw, InnerCondition::dirichlet(0.4)), DomainError);
    SolverOptions grid;
    grid.representation = Representation::grid3d;
    CHECK_THROWS_AS(solve_asymptotic(schwarzschild_on_flat(), InnerCondition::transmission(), grid), CapabilityError);
    CHECK_THROWS_AS(solve_asymptotic(make_sphere_cap(2.0), InnerCondition::none()), PreconditionError);
    CHECK_THROWS_AS(solve_green(schw, SurfaceModel::ellipsoid(1.0, 2.0)), CapabilityError);
}

TEST_CASE("Kato inequality") {
    // 1/r attains equality.
    const HarmonicField G = solve_green(make_flat(), SurfaceModel::coordinate_sphere(1.0));
    const auto pts = random_field_points(G, 200, 7);
    const KatoReport eq = kato_check(G, pts);
    CHECK(eq.evaluated == 200);
    CHECK(eq.equality_points.size() == 200);
    CHECK(std::abs(eq.min_relative_slack) < 1e-8);
    for (const auto& p : pts) {
        const FieldGeometry fg = field_geometry(G, p.x);
        CHECK(std::abs(fg.hess_norm_sq - 1.5 * fg.grad_of_grad_norm_sq) < 1e-12);
    }

    const auto glued = schwarzschild_on_flat();
    const HarmonicField u = solve_asymptotic(glued, InnerCondition::transmission());
    const KatoReport rep = kato_check(u, random_field_points(u, 300, 11));
    CHECK(rep.min_slack >= -1e-9);

    const HarmonicField w = solve_asymptotic(make_schwarzschild(1.0), InnerCondition::dirichlet(1.0));
    CHECK(kato_check(w, random_field_points(w, 300, 3)).min_slack >= -1e-9);
}

TEST_CASE("corner regularity across the gluing sphere") {
    const auto glued = schwarzschild_on_flat();
    const HarmonicField u = solve_asymptotic(glued, InnerCondition::transmission());
    const CornerProbe probe = corner_regularity_probe(u, *u.transmission(), {0.02, 0.01, 0.005, 0.0025});
    CHECK(probe.H_exterior == doctest::Approx(8.0 / 27.0).epsilon(1e-8));
    CHECK(probe.H_interior == doctest::Approx(8.0 / 9.0).epsilon(1e-8));
    CHECK(probe.trace_mismatch < 1e-12);
    CHECK(probe.flux_mismatch < 1e-9);
    CHECK(probe.normal_jump_residual < 1e-6);
    for (std::size_t k = 1; k < probe.cauchy.size(); ++k) CHECK(probe.cauchy[k] < probe.cauchy[k - 1]);

    // Along the axis: jump of d^2u/dt^2 is -(16/81) cos(theta).
    const Vec3 x(1.0, 0.0, 0.0);
    const Vec3 mu_e = Vec3::UnitX() / std::pow(1.5, 2);
    const Vec3 mu_i = Vec3::UnitX() / 2.25;
    const double se = mu_e.dot(field_geometry(u, x, Side::exterior).hess * mu_e);
    const double si = mu_i.dot(field_geometry(u, x, Side::interior).hess * mu_i);
    CHECK(si - se == doctest::Approx(-16.0 / 81.0).epsilon(1e-8));
}

TEST_CASE("foliation identity along level sets of the Green function") {
    const HarmonicField flat = solve_green(make_flat(), SurfaceModel::coordinate_sphere(1.0));
    const FoliationProfile p = foliation_profile_check(flat, Vec3(3.0, 0.5, 0.2), 0.01, 20);
    CHECK_FALSE(p.truncated);
    CHECK(p.max_residual < 1e-5);
    const HarmonicField schw = solve_green(make_schwarzschild(1.0), SurfaceModel::coordinate_sphere(1.0));
    const FoliationProfile q = foliation_profile_check(schw, Vec3(1.5, 0.0, 0.5), 0.01, 20);
    CHECK(q.max_residual > 1e-2);
}

TEST_CASE("grid3d agrees with the separated solution") {
    SolverOptions grid;
    grid.representation = Representation::grid3d;
    for (const Metric& metric : {make_flat(), make_schwarzschild(1.0)}) {
        const HarmonicField sep = solve_asymptotic(metric, InnerCondition::dirichlet(1.0));
        const HarmonicField g = solve_asymptotic(metric, InnerCondition::dirichlet(1.0), grid);
        CHECK(g.grid()->data().residual < 1e-10);
        double worst = 0.0;
        for (const auto& p : random_field_points(g, 400, 5)) worst = std::max(worst, std::abs(g.value(p.x) - sep.value(p.x)));
        MESSAGE("grid vs separated sup difference " << worst);
        CHECK(worst < 1e-3);
        CHECK(g.grid()->data().far_dipole == doctest::Approx(sep.separated()->dipole).epsilon(2e-2));
    }
}

TEST_CASE("grid3d is identical with serial and parallel kernels") {
    SolverOptions a;
    a.representation = Representation::grid3d;
    a.grid_spacing = 0.2;
    SolverOptions b = a;
    b.parallel = false;
    const Metric flat = make_flat();
    kernels::set_thread_count(3);
    const HarmonicField ga = solve_asymptotic(flat, InnerCondition::dirichlet(1.0), a);
    kernels::set_thread_count(1);
    const HarmonicField gb = solve_asymptotic(flat, InnerCondition::dirichlet(1.0), b);
    CHECK(ga.grid()->data().values == gb.grid()->data().values);
}
