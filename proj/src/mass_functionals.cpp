#include "mass_lab/mass_functionals.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mass_lab {

std::string to_string(Region region) {
    switch (region) {
        case Region::exterior: return "exterior";
        case Region::fillin: return "fillin";
        case Region::both: return "both";
    }
    return "?";
}

namespace {

// Radius splitting the exterior region from the fill-in (or from the excluded ball).
double split_radius(const HarmonicField& field) {
    if (field.has_boundary()) return field.inner_radius();
    if (const auto t = field.transmission()) return t->interface_radius;
    if (const GridField* grid = field.grid()) return grid->data().inner_radius;
    return 0.0;
}

struct BulkNode {
    Vec3 x;
    double weight;  // includes 2 pi r^2 sin(angle), not sqrt(det g)
    Side side;
    bool field_side = false;  // let the field pick the side (no inner radius)
};

// Axisymmetric nodes about the x_1 axis. Exterior radii beyond r_in use r = r_in / s.
std::vector<BulkNode> bulk_nodes(Region region, double r_in, int n_radial, int n_angle) {
    std::vector<BulkNode> nodes;
    const numerics::QuadratureRule ang = numerics::gauss_legendre(n_angle, 0.0, pi);
    auto push_shell = [&](double r, double w_r, Side side) {
        for (std::size_t j = 0; j < ang.nodes.size(); ++j) {
            const double a = ang.nodes[j];
            nodes.push_back({Vec3(r * std::cos(a), r * std::sin(a), 0.0),
                             2.0 * pi * r * r * std::sin(a) * ang.weights[j] * w_r, side, r_in == 0.0});
        }
    };
    // Two panels per radial piece; inverted pieces cover r >= scale via r = scale / s.
    auto radial_panels = [&](double a, double b, Side side, double scale) {
        const double mid = 0.5 * (a + b);
        for (const auto& [lo, hi] : {std::pair{a, mid}, std::pair{mid, b}}) {
            const numerics::QuadratureRule rule = numerics::gauss_legendre(n_radial / 2, lo, hi);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double s = rule.nodes[i];
                if (scale == 0.0)
                    push_shell(s, rule.weights[i], side);
                else
                    push_shell(scale / s, rule.weights[i] * scale / (s * s), side);
            }
        }
    };
    if (region != Region::fillin) {
        if (r_in > 0.0) {
            radial_panels(0.0, 1.0, Side::exterior, r_in);
        } else {
            radial_panels(0.0, 1.0, Side::exterior, 0.0);
            radial_panels(0.0, 1.0, Side::exterior, 1.0);
        }
    }
    if (region != Region::exterior && r_in > 0.0) radial_panels(0.0, r_in, Side::interior, 0.0);
    return nodes;
}

struct BulkPass {
    double guarded = 0.0, unguarded = 0.0, min_grad = std::numeric_limits<double>::infinity();
    bool truncated = false;
};

BulkPass bulk_pass(const HarmonicField& field, Region region, double r_in, int n_radial, int n_angle, double guard) {
    const std::vector<BulkNode> nodes = bulk_nodes(region, r_in, n_radial, n_angle);
    std::vector<double> guarded(nodes.size(), 0.0), raw(nodes.size(), 0.0), grad(nodes.size(), 0.0);
    std::vector<std::uint8_t> skipped(nodes.size(), 0);
    const GridField* grid = field.grid();
    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const BulkNode& n = nodes[i];
        grad[i] = std::numeric_limits<double>::infinity();
        if (grid && !grid->evaluable(n.x)) {
            skipped[i] = 1;
            return;
        }
        const FieldGeometry fg = field_geometry(field, n.x, n.field_side ? field.side_of(n.x) : n.side);
        const double vol = std::sqrt(fg.geometry.g.determinant()) * n.weight;
        const double R = fg.geometry.scalar_curvature;
        const double norm = fg.grad_norm;
        const double safe = norm < guard ? std::sqrt(norm * norm + guard * guard) : norm;
        guarded[i] = vol * (fg.hess_norm_sq / safe + R * safe);
        raw[i] = vol * (fg.hess_norm_sq / norm + R * norm);
        grad[i] = norm;
    });
    BulkPass out;
    out.guarded = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return guarded[i]; });
    out.unguarded = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return raw[i]; });
    out.min_grad = *std::min_element(grad.begin(), grad.end());
    out.truncated = std::any_of(skipped.begin(), skipped.end(), [](std::uint8_t s) { return s != 0; });
    return out;
}

}  // namespace

BulkResult bulk_integral(const HarmonicField& field, Region region, const BulkOptions& options) {
    if (options.n_radial < 4 || options.n_angle < 2) throw ArgumentError("bulk quadrature too coarse");
    const double r_in = options.inner_radius > 0.0 ? options.inner_radius : split_radius(field);
    if (region != Region::exterior && !field.has_fillin())
        throw PreconditionError("field " + field.describe() + " has no fill-in region");
    const BulkPass fine = bulk_pass(field, region, r_in, options.n_radial, options.n_angle, options.guard);
    const BulkPass coarse = bulk_pass(field, region, r_in, options.n_radial / 2, std::max(2, options.n_angle / 2),
                                      options.guard);
    BulkResult out;
    out.value = fine.guarded;
    out.unguarded = fine.unguarded;
    out.error_estimate = std::abs(fine.guarded - coarse.guarded);
    out.min_grad = fine.min_grad;
    out.truncated = fine.truncated;
    out.divergent = !std::isfinite(fine.unguarded) ||
                    std::abs(fine.guarded - fine.unguarded) > 0.01 * std::abs(fine.guarded);
    return out;
}

// ---------------------------------------------------------------------------
// Boundary terms

namespace {

struct TraceData {
    double beta = 0.0;
    double tangential = 0.0;  // |grad_S u|
    double normal = 0.0;      // du/dnu
    double grad = 0.0;        // |grad u|
};

TraceData trace_at(const HarmonicField& field, const SurfaceModel& surface, double theta, double phi, Side side) {
    const FundamentalForms ff = fundamental_forms(surface, *field.metric(), theta, phi, side);
    const FieldSample s = field.sample(ff.point, side);
    const Vec2 deta(s.grad.dot(ff.param.xt), s.grad.dot(ff.param.xp));
    TraceData t;
    t.tangential = std::sqrt(std::max(0.0, deta.dot(ff.first_inv * deta)));
    t.normal = s.grad.dot(ff.normal);
    t.grad = std::hypot(t.normal, t.tangential);
    t.beta = std::atan2(t.normal, t.tangential);
    return t;
}

double periodic_step(double h, double theta) { return std::min({h, 0.25 * theta, 0.25 * (pi - theta)}); }

}  // namespace

BoundaryTerms boundary_terms(const HarmonicField& field, const SurfaceModel& surface_in, Side side,
                             const BoundaryOptions& options) {
    // Coordinate spheres are parametrized with poles on the x_1 axis, where
    // the tangential gradient of a field asymptotic to x_1 vanishes.
    const SurfaceModel surface = surface_in.is_coordinate_sphere() ? surface_in.with_polar_axis(0) : surface_in;
    const std::vector<ParameterNode> nodes = surface_rule(options.n_theta, options.n_phi);
    std::vector<AngleTermSample> samples(nodes.size());
    std::vector<double> h_term(nodes.size()), form_diff(nodes.size(), 0.0);
    std::vector<std::uint8_t> excluded(nodes.size(), 0);
    const MetricModel& metric = *field.metric();

    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const ParameterNode& node = nodes[i];
        const FundamentalForms ff = fundamental_forms(surface, metric, node.theta, node.phi, side);
        const FieldGeometry fg = field_geometry(field, ff.point, side);
        const Vec3& du = fg.sample.grad;
        const Mat2& ginv = ff.first_inv;
        const std::array<Vec3, 2> X{ff.param.xt, ff.param.xp};
        const Vec2 deta(du.dot(X[0]), du.dot(X[1]));
        const double tangential = std::sqrt(std::max(0.0, deta.dot(ginv * deta)));
        const double psi = du.dot(ff.normal);
        const double grad = std::hypot(psi, tangential);

        AngleTermSample& out = samples[i];
        out.theta = node.theta;
        out.phi = node.phi;
        out.point = ff.point;
        out.weight = grad;
        out.area_weight = node.weight * ff.area_element;
        out.beta = std::atan2(psi, tangential);
        h_term[i] = -ff.H * grad * out.area_weight;

        if (tangential < options.exclude_below) {
            excluded[i] = 1;
            return;
        }
        // Angle form: derivatives of beta along the parameter lines.
        const double ht = periodic_step(options.step, node.theta);
        const double hp = options.step;
        auto beta = [&](double t, double p) { return trace_at(field, surface, t, p, side).beta; };
        const double bt = (beta(node.theta - 2 * ht, node.phi) - 8 * beta(node.theta - ht, node.phi) +
                           8 * beta(node.theta + ht, node.phi) - beta(node.theta + 2 * ht, node.phi)) /
                          (12 * ht);
        const double bp = (beta(node.theta, node.phi - 2 * hp) - 8 * beta(node.theta, node.phi - hp) +
                           8 * beta(node.theta, node.phi + hp) - beta(node.theta, node.phi + 2 * hp)) /
                          (12 * hp);
        const Vec2 dbeta(bt, bp);
        out.dbeta = dbeta.dot(ginv * deta) / tangential;
        out.integrand = out.dbeta * grad;

        // Surface form from the ambient Hessian and the second fundamental form.
        const Mat3& hess = fg.hess;
        const Mat2& II = ff.second;
        Mat2 hess_s;  // intrinsic Hessian of the trace
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) hess_s(a, b) = X[a].dot(hess * X[b]) - psi * II(a, b);
        const Vec2 up = ginv * deta;  // grad_S u in parameter components
        Vec2 dpsi;
        for (int a = 0; a < 2; ++a) dpsi[a] = X[a].dot(hess * ff.normal) + II.row(a).dot(up);
        const Vec2 n_hat = up / tangential;
        const double hess_nn = n_hat.dot(hess_s * n_hat);
        out.surface_form_integrand = dpsi.dot(up) / grad - psi / grad * hess_nn;
        const double laplacian_s = (ginv.cwiseProduct(hess_s)).sum();
        out.curvature = (laplacian_s - hess_nn) / tangential;
        if (tangential > 1e-6) form_diff[i] = std::abs(out.surface_form_integrand - out.integrand);
    });

    BoundaryTerms out;
    out.H_term = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return h_term[i]; });
    out.area = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return samples[i].area_weight; });
    out.angle_term = kernels::sum_serial(nodes.size(), [&](std::size_t i) {
        return excluded[i] ? 0.0 : samples[i].integrand * samples[i].area_weight;
    });
    out.excluded_measure = kernels::sum_serial(
        nodes.size(), [&](std::size_t i) { return excluded[i] ? samples[i].area_weight : 0.0; });
    out.excluded = static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), 1));
    out.max_form_difference = *std::max_element(form_diff.begin(), form_diff.end());
    if (options.keep_samples) out.samples = std::move(samples);
    return out;
}

// ---------------------------------------------------------------------------
// Level-set topology

LevelSetDeficit level_set_deficit(const HarmonicField& field, const DeficitOptions& options) {
    if (options.grid < 8) throw ArgumentError("level-set grid needs at least 8 cells");
    LevelSetDeficit out;
    const double r_sigma = options.surface_radius > 0.0 ? options.surface_radius
                                                        : (field.has_boundary() ? field.inner_radius() : 0.0);
    const double r_ref = r_sigma > 0.0 ? r_sigma : (split_radius(field) > 0.0 ? split_radius(field) : 1.0);

    // Range of u on the reference sphere; outside it levels are graphs over the x_2 x_3 plane.
    // Fields asymptotic to x_1 take their extremes on the x_1 axis; the
    // sphere rule guards against other profiles.
    std::vector<Vec3> probes{r_ref * Vec3::UnitX(), -r_ref * Vec3::UnitX()};
    for (const SphereNode& n : sphere_rule(24, 48)) probes.push_back(r_ref * n.direction);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Vec3& x : probes) {
        const double u = field.sample(x, Side::exterior).u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    out.T = std::max(std::abs(lo), std::abs(hi));
    double box = options.box_factor * std::max(r_ref, out.T);
    if (const GridField* grid = field.grid()) box = std::min(box, 0.9 * grid->data().half_width);
    out.box = box;
    const double cylinder = 0.9 * box;

    auto extended = [&](const Vec3& x) {
        const double r = x.norm();
        if (r_sigma > 0.0 && r < r_sigma) {
            if (r < 1e-12) return 0.0;
            return field.sample(x * (r_sigma / r), Side::exterior).u * r / r_sigma;
        }
        return field.sample(x).u;
    };
    const Vec3 corner = Vec3::Constant(box);
    // Sample serially into a grid; the sampler is thread-safe so parallelize the fill.
    ScalarGrid ugrid;
    ugrid.lo = -corner;
    ugrid.hi = corner;
    ugrid.n = options.grid;
    const std::size_t m = static_cast<std::size_t>(options.grid + 1);
    ugrid.values.resize(m * m * m);
    kernels::map_parallel(ugrid.values.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx % m), j = static_cast<int>((idx / m) % m), k = static_cast<int>(idx / (m * m));
        ugrid.values[idx] = extended(ugrid.point(i, j, k));
    });
    const ScalarGrid region = sample_grid(
        [&](const Vec3& x) {
            const double cyl = cylinder - std::hypot(x[1], x[2]);
            return r_sigma > 0.0 ? std::min(x.norm() - r_sigma, cyl) : cyl;
        },
        -corner, corner, options.grid);

    // Levels at midpoints of four equal intervals between the extreme values on the sphere.
    const double a = r_sigma > 0.0 ? lo : -out.T, b = r_sigma > 0.0 ? hi : out.T;
    constexpr int intervals = 4;
    for (int k = 0; k < intervals; ++k) {
        const double len = (b - a) / intervals;
        const double t = a + (k + 0.5) * len;
        out.t.push_back(t);
        out.lengths.push_back(len);
        const LevelSetMesh mesh = extract_level_set(ugrid, &region, t);
        long chi = mesh.faces.empty() ? 1 : euler_characteristic(mesh);
        // Regularity: |grad u| on the extracted vertices.
        bool regular = true;
        const std::size_t stride = std::max<std::size_t>(1, mesh.vertices.size() / 200);
        for (std::size_t v = 0; v < mesh.vertices.size(); v += stride) {
            Vec3 x = mesh.vertices[v];
            if (r_sigma > 0.0 && x.norm() < r_sigma) x *= r_sigma / x.norm();
            if (field.sample(x, r_sigma > 0.0 ? Side::exterior : field.side_of(x)).grad.norm() <
                options.regular_threshold) {
                regular = false;
                break;
            }
        }
        out.chi.push_back(chi);
        out.skipped.push_back(!regular);
        if (regular) out.deficit += 2.0 * pi * static_cast<double>(chi - 1) * len;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Brown-York and reference mass

double brown_york(const SurfaceModel& surface, const MetricModel& metric, const EmbeddingResult& embedding,
                  int n_theta, Side side) {
    if (!surface.revolution_symmetric())
        throw CapabilityError("Brown-York evaluation needs a surface symmetric about the z axis");
    const int n_phi = metric.is_radial() ? 1 : 2 * n_theta;
    const std::vector<ParameterNode> nodes = surface_rule(n_theta, n_phi);
    std::vector<double> part(nodes.size()), K(nodes.size());
    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const ParameterNode& n = nodes[i];
        const FundamentalForms ff = fundamental_forms(surface, metric, n.theta, n.phi, side);
        K[i] = ff.K;
        part[i] = (embedding.mean_curvature(n.theta) - ff.H) * ff.area_element * n.weight;
    });
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (!(K[i] > 0.0)) {
            std::ostringstream os;
            os << "Gauss curvature non-positive (" << K[i] << ") on " << surface.describe() << " at theta="
               << nodes[i].theta << "; Brown-York mass undefined";
            throw PreconditionError(os.str());
        }
    return kernels::sum_serial(nodes.size(), [&](std::size_t i) { return part[i]; }) / (8.0 * pi);
}

double reference_mass(const MetricModel& metric) {
    if (const GluedMetric* glued = metric.as_glued()) return reference_mass(*glued->exterior());
    const double radius = std::max(10.0, 10.0 * std::max(metric.asymptotic_radius(), metric.excluded_radius()));
    const AdmMethod method = metric.conformal_factor() ? AdmMethod::conformal_flux : AdmMethod::surface_integral;
    return adm_mass(metric, radius, method, true).mass;
}

// ---------------------------------------------------------------------------
// Mass inequalities

BoundaryInequalityReport verify_boundary_inequality(const HarmonicField& field, const SurfaceModel& sigma, const VerifyOptions& options) {
    if (!sigma.is_coordinate_sphere())
        throw CapabilityError("the boundary inequality is evaluated on coordinate spheres only, got " +
                              sigma.describe());
    const double r0 = sigma.sphere_radius();
    BoundaryInequalityReport out;
    out.mass = reference_mass(*field.metric());
    BulkOptions bulk_options = options.bulk;
    bulk_options.inner_radius = r0;
    const BulkResult bulk = bulk_integral(field, Region::exterior, bulk_options);
    out.bulk = bulk.value;
    out.bulk_error = bulk.error_estimate;
    const BoundaryTerms b = boundary_terms(field, sigma, Side::exterior, options.boundary);
    out.H_term = b.H_term;
    out.angle_term = b.angle_term;
    DeficitOptions deficit = options.deficit;
    deficit.surface_radius = r0;
    out.deficit = level_set_deficit(field, deficit);
    out.chi_deficit = out.deficit.deficit;
    out.lhs = 8.0 * pi * out.mass + out.chi_deficit;
    out.rhs = 0.5 * out.bulk + out.H_term + out.angle_term;
    out.residual = out.lhs - out.rhs;
    return out;
}

FillinInequalityReport verify_fillin_inequality(const HarmonicField& field, const VerifyOptions& options, double tolerance) {
    const auto interface = field.transmission();
    if (!field.has_fillin() || !interface)
        throw PreconditionError("the fill-in inequality needs a transmission solve, got " + field.describe());
    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(interface->interface_radius);
    FillinInequalityReport out;
    out.tolerance = tolerance;
    const BulkResult ext = bulk_integral(field, Region::exterior, options.bulk);
    const BulkResult in = bulk_integral(field, Region::fillin, options.bulk);
    out.bulk_exterior = ext.value;
    out.bulk_fillin = in.value;
    out.bulk_error = ext.error_estimate + in.error_estimate;
    out.divergent = ext.divergent || in.divergent;
    const BoundaryTerms bext = boundary_terms(field, sigma, Side::exterior, options.boundary);
    const BoundaryTerms bin = boundary_terms(field, sigma, Side::interior, options.boundary);
    out.boundary_H_term = bext.H_term;
    out.angle_term = bext.angle_term;
    out.angle_term_fillin = bin.angle_term;
    // H terms are -integral H |grad u| on each side.
    out.corner_term = (bext.H_term - bin.H_term) / (8.0 * pi);
    out.chi_deficit = level_set_deficit(field, options.deficit).deficit;
    out.mass = reference_mass(*field.metric());
    out.rhs = (out.bulk_exterior + out.bulk_fillin) / (16.0 * pi) + out.corner_term +
              (out.angle_term - out.angle_term_fillin) / (8.0 * pi);
    out.residual = out.mass - out.rhs;

    double min_grad = std::min(ext.min_grad, in.min_grad);
    const auto points = random_field_points(field, options.gradient_samples, options.seed);
    std::vector<double> grads(points.size());
    kernels::map_parallel(points.size(),
                          [&](std::size_t i) { grads[i] = field_geometry(field, points[i].x, points[i].side).grad_norm; });
    for (double g : grads) min_grad = std::min(min_grad, g);
    out.min_grad = min_grad;
    out.equality_expected = min_grad > 1e-8;
    const double scale = std::abs(out.mass) > 0.0 ? std::abs(out.mass) : 1.0;
    out.passed = out.equality_expected ? std::abs(out.residual) <= tolerance * scale
                                       : out.residual >= -tolerance * scale;
    return out;
}

VectorFieldConditionsReport verify_vector_field_conditions(const GluedMetric& metric, const VectorFieldModel& X, const VectorFieldModel& Y,
                                     double C1, double C2, std::size_t samples, std::uint64_t seed) {
    VectorFieldConditionsReport out;
    out.constants_valid = C1 >= 2.0 / 3.0 && C2 >= 2.0 / 3.0;
    const double r0 = metric.interface_radius();
    SampleStream rng(seed);
    std::vector<Vec3> inner(samples), outer(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        inner[i] = std::cbrt(rng.uniform()) * (1.0 - 1e-6) * r0 * rng.direction();
        outer[i] = r0 * (1.0 + 1e-6 + 19.0 * rng.uniform()) * rng.direction();
    }
    auto check = [&](const std::vector<Vec3>& pts, const VectorFieldModel& V, double C, Side side) {
        std::vector<double> margin(pts.size());
        kernels::map_parallel(pts.size(), [&](std::size_t i) {
            const double R = scalar_curvature(metric, pts[i], side);
            const double bound =
                V.is_zero() ? 0.0 : C * std::pow(V.norm(metric, pts[i], side), 2) - 2.0 * V.divergence(metric, pts[i], side);
            margin[i] = R - bound;
        });
        ConditionCheck c;
        const auto it = std::min_element(margin.begin(), margin.end());
        c.margin = *it;
        c.witness = pts[static_cast<std::size_t>(it - margin.begin())];
        c.passed = c.margin >= -1e-9;
        return c;
    };
    out.fillin = check(inner, X, C1, Side::interior);
    out.exterior = check(outer, Y, C2, Side::exterior);

    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(r0);
    const std::vector<ParameterNode> nodes = surface_rule(24, 48);
    std::vector<double> margin(nodes.size());
    std::vector<Vec3> where(nodes.size());
    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const FundamentalForms fe = fundamental_forms(sigma, metric, nodes[i].theta, nodes[i].phi, Side::exterior);
        const FundamentalForms fi = fundamental_forms(sigma, metric, nodes[i].theta, nodes[i].phi, Side::interior);
        const double y = Y.is_zero() ? 0.0 : fe.normal_covector.dot(Y(fe.point));
        const double x = X.is_zero() ? 0.0 : fi.normal_covector.dot(X(fi.point));
        margin[i] = (fi.H - x) - (fe.H - y);
        where[i] = fe.point;
    });
    const auto it = std::min_element(margin.begin(), margin.end());
    out.boundary.margin = *it;
    out.boundary.witness = where[static_cast<std::size_t>(it - margin.begin())];
    out.boundary.passed = out.boundary.margin >= -1e-9;

    if (!Y.is_zero()) out.decay_warning = !Y.check_decay({10.0 * r0, 20.0 * r0, 40.0 * r0, 80.0 * r0}).consistent;
    out.nonnegative_mass_implied = out.constants_valid && out.fillin.passed && out.exterior.passed &&
                                   out.boundary.passed && !out.decay_warning;
    return out;
}

RobinReport robin_mass_bound(const Metric& metric, double radius, const VerifyOptions& options) {
    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(radius);
    const HarmonicField green = solve_green(metric, sigma);
    const HarmonicField w = solve_asymptotic(metric, InnerCondition::dirichlet(radius));
    RobinReport out;
    out.solution = solve_robin_v(metric, green, w);
    const HarmonicField& u = out.solution.u;
    BulkOptions bulk = options.bulk;
    bulk.inner_radius = radius;
    out.bulk = bulk_integral(u, Region::exterior, bulk).value;
    const double dG = out.solution.dG_dmu;
    const std::vector<ParameterNode> nodes = surface_rule(options.boundary.n_theta, options.boundary.n_phi);
    const SurfaceModel s0 = sigma.with_polar_axis(0);
    std::vector<double> part(nodes.size());
    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const FundamentalForms ff = fundamental_forms(s0, *metric, nodes[i].theta, nodes[i].phi);
        const double grad = field_geometry(u, ff.point, Side::exterior).grad_norm;
        part[i] = (ff.H + 2.0 * dG) * grad * ff.area_element * nodes[i].weight;
    });
    out.boundary = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return part[i]; });
    out.bound = out.bulk / (16.0 * pi) - out.boundary / (4.0 * pi);
    out.mass = reference_mass(*metric);
    return out;
}

}  // namespace mass_lab
