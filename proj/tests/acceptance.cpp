// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "mass_lab/asymptotics.hpp"
#include "mass_lab/errors.hpp"
#include "mass_lab/fillins.hpp"
#include "mass_lab/mass_functionals.hpp"
#include "mass_lab/weyl_embedding.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace mass_lab;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records a named value and whether it meets its bound.
    void expect(bool ok, const std::string& what, double value) {
        if (detail.tellp() > 0) detail << "; ";
        detail << what << "=" << value << (ok ? "" : " [out of bounds]");
        pass = pass && ok;
    }
};

Metric flat_ball() { return make_conformally_flat([](double) { return Jet{1.0, 0.0, 0.0}; }, "flat ball", 1.0); }

std::shared_ptr<const GluedMetric> schwarzschild_on_ball(double m = 1.0) {
    return make_glued(make_schwarzschild(m), flat_ball(), 1.0);
}

double sphere_by_mass(const Metric& metric, double r) {
    const SurfaceModel s = SurfaceModel::coordinate_sphere(r);
    return brown_york(s, *metric, embed_revolution(RevolutionMetric::induced(s, metric)));
}

// ---------------------------------------------------------------------------

void flat_null(Outcome& o) {
    const Metric flat = make_flat();
    o.expect(std::abs(adm_mass(*flat, 10.0, AdmMethod::surface_integral, true).mass) < 1e-10, "adm",
             adm_mass(*flat, 10.0, AdmMethod::surface_integral, true).mass);
    double worst_by = 0.0;
    for (double r : {1.0, 10.0}) worst_by = std::max(worst_by, std::abs(sphere_by_mass(flat, r)));
    o.expect(worst_by < 1e-10, "max|m_BY|", worst_by);

    const HarmonicField u = solve_asymptotic(flat, InnerCondition::none());
    const BulkResult bulk = bulk_integral(u, Region::exterior);
    o.expect(std::abs(bulk.value) < 1e-10, "bulk", bulk.value);
    const LevelSetDeficit deficit = level_set_deficit(u);
    o.expect(deficit.deficit == 0.0, "chi_deficit", deficit.deficit);
    const KatoReport kato = kato_check(u, random_field_points(u, 1000, 5));
    o.expect(std::abs(kato.min_slack) < 1e-10, "kato_slack", kato.min_slack);

    // Flat space glued to a flat ball: no corner, no curvature.
    const HarmonicField v = solve_asymptotic(make_glued(flat, flat_ball(), 1.0), InnerCondition::transmission());
    const FillinInequalityReport r = verify_fillin_inequality(v);
    double worst = 0.0;
    for (double t : {r.mass, r.bulk_exterior, r.bulk_fillin, r.corner_term, r.chi_deficit, r.residual})
        worst = std::max(worst, std::abs(t));
    o.expect(worst < 1e-10, "max|glued terms|", worst);

    SolverOptions grid;
    grid.representation = Representation::grid3d;
    grid.grid_spacing = 0.1;  // x_1 is exact on any grid; keeps the solve short
    const HarmonicField g = solve_asymptotic(flat, InnerCondition::none(), grid);
    double dev = 0.0;
    for (const auto& p : random_field_points(g, 500, 9)) dev = std::max(dev, std::abs(g.value(p.x) - p.x[0]));
    o.expect(dev < 1e-5, "grid|u-x1|", dev);
    const BulkResult gbulk = bulk_integral(g, Region::exterior);
    o.expect(std::abs(gbulk.value) < 1e-5, "grid_bulk", gbulk.value);
    const double gdef = level_set_deficit(g).deficit;
    o.expect(std::abs(gdef) < 1e-5, "grid_chi_deficit", gdef);
}

void schwarzschild_adm(Outcome& o) {
    for (double m : {0.5, 1.0, 2.0}) {
        const Metric s = make_schwarzschild(m);
        const double flux = adm_mass(*s, 10.0, AdmMethod::conformal_flux, false).mass;
        o.expect(std::abs(flux - m) < 1e-12, "flux-m(m=" + std::to_string(m).substr(0, 3) + ")", flux - m);
        const double integral = adm_mass(*s, 20.0, AdmMethod::surface_integral, true).mass;
        o.expect(std::abs(integral - m) < 1e-3, "extrapolated-m", integral - m);
    }
}

// Interior u = a x_1 on the flat ball of radius phi(1)^2, exterior
// u = (x_1 + b x_1 / r^3) / phi with phi = 1 + m / 2r; continuity of u and of
// its unit normal derivative at r = 1 gives a 2x2 system for (a, b).
Eigen::Vector2d transmission_oracle(double m) {
    const double phi = 1.0 + 0.5 * m, dphi = -0.5 * m, s = phi * phi;
    // f = (r + b r^-2) / phi, f' = (1 - 2 b r^-3) / phi - (r + b r^-2) dphi / phi^2 at r = 1
    Eigen::Matrix2d A;
    Eigen::Vector2d rhs;
    A << s, -1.0 / phi, 1.0, (2.0 / phi + dphi / (phi * phi)) / s;
    rhs << 1.0 / phi, (1.0 / phi - dphi / (phi * phi)) / s;
    return A.partialPivLu().solve(rhs);
}

void transmission(Outcome& o) {
    const Eigen::Vector2d ab = transmission_oracle(1.0);
    const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(), InnerCondition::transmission());
    const RadialMode* mode = u.separated();
    o.expect(std::abs(mode->interior_slope - ab[0]) < 1e-10, "a-oracle", mode->interior_slope - ab[0]);
    o.expect(std::abs(mode->dipole - ab[1]) < 1e-10, "b-oracle", mode->dipole - ab[1]);
    o.expect(std::abs(ab[0] - 1.0 / 3.0) < 1e-14 && std::abs(ab[1] - 0.125) < 1e-14, "oracle(a)", ab[0]);
    double worst = 0.0;
    for (int k = 0; k < 16; ++k) {
        const double th = (k + 0.5) * pi / 16.0, ph = 0.7 * k;
        const Vec3 x(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        for (Side side : {Side::exterior, Side::interior})
            worst = std::max(worst, std::abs(field_geometry(u, x, side).grad_norm - 1.0 / 3.0));
    }
    o.expect(worst < 1e-8, "max||grad u|-1/3|", worst);
}

void fillin_equality(Outcome& o) {
    const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(), InnerCondition::transmission());
    const FillinInequalityReport r = verify_fillin_inequality(u);
    o.expect(std::abs(r.corner_term - 0.5) < 1e-3, "corner", r.corner_term);
    const double bulk = r.bulk_exterior / (16.0 * pi);
    o.expect(std::abs(bulk - 0.5) < 1e-2, "bulk/16pi", bulk);
    o.expect(std::abs(r.rhs - 1.0) < 1e-3, "rhs", r.rhs);
    o.expect(std::abs(r.mass - 1.0) < 1e-3, "mass", r.mass);
}

void boundary_identity(Outcome& o) {
    const HarmonicField u = solve_asymptotic(make_flat(), InnerCondition::none());
    const BoundaryInequalityReport r = verify_boundary_inequality(u, SurfaceModel::coordinate_sphere(1.0));
    o.expect(std::abs(r.chi_deficit + 4.0 * pi) < 1e-6, "chi_deficit", r.chi_deficit);
    o.expect(std::abs(r.H_term + 8.0 * pi) < 1e-6, "H_term", r.H_term);
    o.expect(std::abs(r.angle_term - 4.0 * pi) < 1e-6, "angle_term", r.angle_term);
    o.expect(std::abs(r.residual) < 1e-3, "residual", r.residual);
    bool integral = true;
    for (std::size_t i = 0; i < r.deficit.chi.size(); ++i)
        if (!r.deficit.skipped[i]) integral = integral && (r.deficit.chi[i] == 0 || r.deficit.chi[i] == 1);
    o.expect(integral, "chi_in{0,1}", integral ? 1.0 : 0.0);
}

void kato(Outcome& o) {
    const Metric flat = make_flat(), schw = make_schwarzschild(1.0);
    const SurfaceModel unit = SurfaceModel::coordinate_sphere(1.0);
    const std::vector<std::pair<std::string, HarmonicField>> fields{
        {"flat x1", solve_asymptotic(flat, InnerCondition::none())},
        {"flat dirichlet", solve_asymptotic(flat, InnerCondition::dirichlet(1.0))},
        {"flat neumann", solve_asymptotic(flat, InnerCondition::neumann(1.0))},
        {"schw dirichlet", solve_asymptotic(schw, InnerCondition::dirichlet(1.0))},
        {"schw neumann", solve_asymptotic(schw, InnerCondition::neumann(1.0))},
        {"glued transmission", solve_asymptotic(schwarzschild_on_ball(), InnerCondition::transmission())},
        {"flat green", solve_green(flat, unit)},
        {"schw green", solve_green(schw, unit)},
        {"schw robin", robin_mass_bound(schw, 1.0).solution.u},
    };
    double worst = 0.0;
    std::size_t evaluated = 0;
    for (const auto& [name, f] : fields) {
        const KatoReport r = kato_check(f, random_field_points(f, 10000, 17));
        evaluated += r.evaluated;
        worst = std::min(worst, r.min_slack);
        if (r.min_slack < -1e-8) o.expect(false, name + " slack", r.min_slack);
    }
    o.expect(worst >= -1e-8, "min_slack", worst);
    o.expect(evaluated >= 9 * 9000, "evaluated", static_cast<double>(evaluated));

    const HarmonicField G = solve_green(flat, unit);
    double dev = 0.0;
    for (const auto& p : random_field_points(G, 10000, 23)) {
        const FieldGeometry fg = field_geometry(G, p.x, p.side);
        dev = std::max(dev, std::abs(fg.hess_norm_sq - 1.5 * fg.grad_of_grad_norm_sq));
    }
    o.expect(dev < 1e-10, "1/r max|slack|", dev);
}

void robin(Outcome& o) {
    const double flat1 = robin_mass_bound(make_flat(), 1.0).solution.coefficient;
    const double flat2 = robin_mass_bound(make_flat(), 2.0).solution.coefficient;
    const double schw = robin_mass_bound(make_schwarzschild(1.0), 1.0).solution.coefficient;
    o.expect(std::abs(flat1 - 1.0) < 1e-10, "d(flat,1)-1", flat1 - 1.0);
    o.expect(std::abs(flat2 - 8.0) < 1e-10, "d(flat,2)-8", flat2 - 8.0);
    o.expect(std::abs(schw - 9.0 / 8.0) < 1e-10, "d(schw,1)-9/8", schw - 9.0 / 8.0);
}

void conformal(Outcome& o) {
    const ConformalFillin s = conformal_fillin(make_schwarzschild(1.0), SurfaceModel::coordinate_sphere(2.0));
    o.expect(s.max_difference < 1e-6, "schw formula-direct", s.max_difference);
    for (double r0 : {1.0, 2.0, 3.0}) {
        const ConformalFillin c = conformal_fillin(make_flat(), SurfaceModel::coordinate_sphere(r0));
        double worst = 0.0;
        for (std::size_t i = 0; i < c.theta.size(); ++i)
            worst = std::max({worst, std::abs(c.H_formula[i] - 2.0 / r0), std::abs(c.H_direct[i] - 2.0 / r0)});
        o.expect(worst < 1e-12, "flat r0=" + std::to_string(static_cast<int>(r0)) + " |H*-2/r0|", worst);
    }
}

void brown_york_values(Outcome& o) {
    const Metric s = make_schwarzschild(1.0);
    const double m1 = sphere_by_mass(s, 1.0), m10 = sphere_by_mass(s, 10.0);
    o.expect(std::abs(m1 - 1.5) < 1e-6, "m_BY(1)", m1);
    o.expect(std::abs(m10 - 1.05) < 1e-4, "m_BY(10)", m10);
}

void convergence(Outcome& o) {
    const Metric s = make_schwarzschild(1.0);
    const std::vector<double> r_list{10.0, 31.6, 100.0, 316.0};
    const std::vector<double> bound{0.051, 0.017, 0.0051, 0.0017};
    const ConvergenceStudy spheres = by_convergence_study(s, SurfaceFamily::coordinate_spheres(), r_list);
    for (std::size_t i = 0; i < r_list.size(); ++i) {
        const double e = std::abs(spheres.rows[i].m_by - 1.0);
        o.expect(spheres.rows[i].flag.empty() && e <= 1.1 * bound[i], "|m-1|(" + std::to_string(static_cast<int>(r_list[i])) + ")", e);
    }
    const ConvergenceStudy ell =
        by_convergence_study(s, SurfaceFamily::scaled(SurfaceModel::ellipsoid(1.0, 2.0)), r_list);
    bool decreasing = true;
    for (std::size_t i = 1; i < ell.rows.size(); ++i) decreasing = decreasing && ell.rows[i].m_by < ell.rows[i - 1].m_by;
    o.expect(decreasing && ell.monotone, "ellipsoid monotone", decreasing ? 1.0 : 0.0);
    o.expect(ell.limit && std::abs(*ell.limit - 1.0) <= 2e-2, "ellipsoid limit", ell.limit.value_or(std::nan("")));
}

void collar(Outcome& o) {
    const auto glued = schwarzschild_on_ball();
    const std::vector<double> deltas{0.1, 0.05, 0.025};
    const HarmonicField u = solve_asymptotic(glued, InnerCondition::transmission());
    const CollarResult c = collar_integral(glued, u, deltas);
    const double rel = c.limit ? std::abs(*c.limit - 8.0 * pi) / (8.0 * pi) : 1.0;
    o.expect(rel < 0.05, "limit rel err vs 8pi", rel);

    const auto flat = make_glued(make_flat(), flat_ball(), 1.0);
    const CollarResult z = collar_integral(flat, solve_asymptotic(flat, InnerCondition::transmission()), deltas);
    double worst = 0.0;
    for (double v : z.integral) worst = std::max(worst, std::abs(v));
    o.expect(worst < 1e-10, "flat/flat max|I|", worst);

    const double jump = glued_fillin(glued, 8).second.jump.front();
    double prev = 0.0;
    for (double d : deltas) {
        const double peak = mollify(glued, d)->collar_curvature(0.0);
        const double ratio = peak / (2.0 * jump * mollifier(0.0) / (d * d));
        o.expect(std::abs(ratio - 1.0) < 0.1, "peak/law(" + std::to_string(d).substr(0, 5) + ")", ratio);
        if (prev > 0.0) o.expect(std::abs(peak / prev / 4.0 - 1.0) < 0.1, "halving ratio/4", peak / prev / 4.0);
        prev = peak;
    }
}

void corner(Outcome& o) {
    const HarmonicField u = solve_asymptotic(schwarzschild_on_ball(), InnerCondition::transmission());
    const CornerProbe p = corner_regularity_probe(u, *u.transmission(), {0.02, 0.01, 0.005, 0.0025});
    o.expect(p.normal_jump_residual < 1e-6, "normal jump residual", p.normal_jump_residual);
    o.expect(p.max_cauchy < 1e-4, "max Cauchy", p.max_cauchy);
}

}  // namespace

int main() {
    const std::vector<std::tuple<int, const char*, double, std::function<void(Outcome&)>>> criteria{
        {1, "flat-space null tests", 5.0, flat_null},
        {2, "Schwarzschild ADM mass", 10.0, schwarzschild_adm},
        {3, "transmission oracle", 0.0, transmission},
        {4, "fill-in inequality equality case", 60.0, fillin_equality},
        {5, "boundary mass identity outside the unit ball", 0.0, boundary_identity},
        {6, "refined Kato inequality", 0.0, kato},
        {7, "Robin coefficients", 0.0, robin},
        {8, "conformal fill-in mean curvature", 0.0, conformal},
        {9, "Brown-York values", 0.0, brown_york_values},
        {10, "Brown-York convergence", 300.0, convergence},
        {11, "collar integral of the smoothed corner", 0.0, collar},
        {12, "corner regularity", 0.0, corner},
    };
    int failed = 0;
    for (const auto& [id, name, limit, run] : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << (o.detail.tellp() > 0 ? "; " : "") << "threw: " << e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (limit > 0.0 && seconds > limit) {
            o.pass = false;
            o.detail << "; runtime over " << limit << " s";
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %2d %s: %s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", name, seconds,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
