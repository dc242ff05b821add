#include "mass_lab/surface_geometry.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace mass_lab {

namespace {

SurfacePoint revolution_point(const RevolutionProfile& p, double theta, double phi) {
    const Jet rho = p.rho(theta);
    const Jet z = p.z(theta);
    const double c = std::cos(phi), s = std::sin(phi);
    SurfacePoint out;
    out.x = Vec3(rho.v * c, rho.v * s, z.v);
    out.xt = Vec3(rho.d1 * c, rho.d1 * s, z.d1);
    out.xp = Vec3(-rho.v * s, rho.v * c, 0.0);
    out.xtt = Vec3(rho.d2 * c, rho.d2 * s, z.d2);
    out.xtp = Vec3(-rho.d1 * s, rho.d1 * c, 0.0);
    out.xpp = Vec3(-rho.v * c, -rho.v * s, 0.0);
    return out;
}

RevolutionProfile radial_graph_profile(JetFn radius) {
    RevolutionProfile p;
    p.rho = [radius](double t) {
        const Jet r = radius(t);
        const double s = std::sin(t), c = std::cos(t);
        return Jet{r.v * s, r.d1 * s + r.v * c, r.d2 * s + 2.0 * r.d1 * c - r.v * s};
    };
    p.z = [radius](double t) {
        const Jet r = radius(t);
        const double s = std::sin(t), c = std::cos(t);
        return Jet{r.v * c, r.d1 * c - r.v * s, r.d2 * c - 2.0 * r.d1 * s - r.v * c};
    };
    return p;
}

// Rotates the components so that the parameter pole sits on the given axis.
Vec3 permute_axis(const Vec3& v, int axis) {
    switch (axis) {
        case 0: return Vec3(v.z(), v.x(), v.y());
        case 1: return Vec3(v.y(), v.z(), v.x());
        default: return v;
    }
}

}  // namespace

SurfaceModel SurfaceModel::coordinate_sphere(double radius, int polar_axis) {
    if (!(radius > 0.0)) throw ArgumentError("sphere radius must be positive");
    if (polar_axis < 0 || polar_axis > 2) throw ArgumentError("polar axis must be 0, 1 or 2");
    SurfaceModel m;
    m.kind_ = SurfaceKind::coordinate_sphere;
    std::ostringstream os;
    os << "sphere(r=" << radius << ")";
    m.label_ = os.str();
    m.sphere_radius_ = radius;
    m.polar_axis_ = polar_axis;
    RevolutionProfile p{[radius](double t) { return Jet{radius * std::sin(t), radius * std::cos(t), -radius * std::sin(t)}; },
                        [radius](double t) { return Jet{radius * std::cos(t), -radius * std::sin(t), -radius * std::cos(t)}; }};
    m.eval_ = [p, polar_axis](double t, double f) {
        SurfacePoint s = revolution_point(p, t, f);
        for (Vec3* v : {&s.x, &s.xt, &s.xp, &s.xtt, &s.xtp, &s.xpp}) *v = permute_axis(*v, polar_axis);
        return s;
    };
    return m;
}

SurfaceModel SurfaceModel::revolution(RevolutionProfile profile, std::string label) {
    SurfaceModel m;
    m.kind_ = SurfaceKind::revolution;
    m.label_ = std::move(label);
    m.eval_ = [profile = std::move(profile)](double t, double f) { return revolution_point(profile, t, f); };
    return m;
}

SurfaceModel SurfaceModel::radial_graph(JetFn radius, std::string label) {
    return revolution(radial_graph_profile(std::move(radius)), std::move(label));
}

SurfaceModel SurfaceModel::ellipsoid(double a, double c) {
    if (!(a > 0.0) || !(c > 0.0)) throw ArgumentError("ellipsoid semi-axes must be positive");
    std::ostringstream os;
    os << "ellipsoid(a=" << a << ",c=" << c << ")";
    RevolutionProfile p{[a](double t) { return Jet{a * std::sin(t), a * std::cos(t), -a * std::sin(t)}; },
                        [c](double t) { return Jet{c * std::cos(t), -c * std::sin(t), -c * std::cos(t)}; }};
    return revolution(std::move(p), os.str());
}

SurfaceModel SurfaceModel::dumbbell(double neck) {
    if (!(neck > 0.0 && neck < 1.0)) throw ArgumentError("dumbbell neck must lie in (0, 1)");
    const double d = 1.0 - neck;
    std::ostringstream os;
    os << "dumbbell(neck=" << neck << ")";
    return radial_graph(
        [d](double t) {
            const double s = std::sin(t);
            return Jet{1.0 - d * s * s, -d * std::sin(2.0 * t), -2.0 * d * std::cos(2.0 * t)};
        },
        os.str());
}

SurfaceModel SurfaceModel::from_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open profile file " + path);
    std::vector<double> theta, radius;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double t, r;
        if (!(ls >> t)) continue;
        if (!(ls >> r)) throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected two columns");
        if (!(r > 0.0)) throw ArgumentError(path + ":" + std::to_string(line_no) + ": radius must be positive");
        theta.push_back(t);
        radius.push_back(r);
    }
    if (theta.size() < 4) throw ArgumentError("profile file needs at least four samples");
    // Endpoints written with a few digits are snapped onto the poles.
    if (std::abs(theta.front()) > 1e-4 || std::abs(theta.back() - pi) > 1e-4)
        throw ArgumentError("profile samples must span theta in [0, pi]");
    theta.front() = 0.0;
    theta.back() = pi;
    // Zero end slopes keep the surface smooth at the poles.
    auto spline = std::make_shared<numerics::ClampedSpline>(theta, radius, 0.0, 0.0);
    return radial_graph([spline](double t) { return Jet{spline->value(t), spline->derivative(t), spline->second_derivative(t)}; },
                        "profile(" + path + ")");
}

SurfaceModel SurfaceModel::scaled(const SurfaceModel& base, double factor) {
    if (!(factor > 0.0)) throw ArgumentError("scale factor must be positive");
    SurfaceModel m = base;
    m.kind_ = SurfaceKind::scaled;
    std::ostringstream os;
    os << factor << "*" << base.label_;
    m.label_ = os.str();
    if (base.sphere_radius_) m.sphere_radius_ = *base.sphere_radius_ * factor;
    m.eval_ = [inner = base.eval_, factor](double t, double f) {
        SurfacePoint s = inner(t, f);
        for (Vec3* v : {&s.x, &s.xt, &s.xp, &s.xtt, &s.xtp, &s.xpp}) *v *= factor;
        return s;
    };
    return m;
}

SurfaceModel SurfaceModel::divided(const SurfaceModel& base, double divisor) {
    if (!(divisor > 0.0)) throw ArgumentError("divisor must be positive");
    SurfaceModel m = base;
    m.kind_ = SurfaceKind::scaled;
    std::ostringstream os;
    os << base.label_ << "/" << divisor;
    m.label_ = os.str();
    if (base.sphere_radius_) m.sphere_radius_ = *base.sphere_radius_ / divisor;
    m.eval_ = [inner = base.eval_, divisor](double t, double f) {
        SurfacePoint s = inner(t, f);
        for (Vec3* v : {&s.x, &s.xt, &s.xp, &s.xtt, &s.xtp, &s.xpp}) *v /= divisor;
        return s;
    };
    return m;
}

double SurfaceModel::sphere_radius() const {
    if (!sphere_radius_) throw CapabilityError(label_ + " is not a coordinate sphere");
    return *sphere_radius_;
}

SurfaceModel SurfaceModel::with_polar_axis(int axis) const {
    if (!sphere_radius_) throw CapabilityError("only coordinate spheres can be re-oriented");
    if (axis == polar_axis_) return *this;
    return coordinate_sphere(*sphere_radius_, axis);
}

SurfaceFamily SurfaceFamily::coordinate_spheres() {
    return {[](double r) { return SurfaceModel::coordinate_sphere(r); }, "coordinate spheres"};
}

SurfaceFamily SurfaceFamily::scaled(SurfaceModel base) {
    std::string label = "r*" + base.describe();
    return {[base = std::move(base)](double r) { return SurfaceModel::scaled(base, r); }, std::move(label)};
}

SurfaceModel rescale_surface(const SurfaceFamily& family, double r) {
    if (!(r > 0.0)) throw ArgumentError("rescaling needs r > 0");
    return SurfaceModel::divided(family.at(r), r);
}

double regular_theta(double theta) { return std::clamp(theta, pole_offset, pi - pole_offset); }

const MetricModel& side_ambient(const MetricModel& metric, Side side) {
    if (const GluedMetric* glued = metric.as_glued()) return *glued->side_metric(side);
    return metric;
}

FundamentalForms fundamental_forms(const SurfaceModel& surface, const MetricModel& metric, double theta, double phi,
                                   Side side) {
    FundamentalForms out;
    out.param = surface.eval(theta, phi);
    const SurfacePoint& p = out.param;
    out.point = p.x;
    const MetricModel& ambient = side_ambient(metric, side);
    const GeometrySample geo = geometry_at(ambient, p.x, side);
    const Mat3& g = geo.g;
    out.first << p.xt.dot(g * p.xt), p.xt.dot(g * p.xp), p.xp.dot(g * p.xt), p.xp.dot(g * p.xp);
    const double det = out.first.determinant();
    const double scale = out.first(0, 0) * out.first(0, 0) + out.first(1, 1) * out.first(1, 1);
    if (!(det > 1e-20 * scale)) {
        std::ostringstream os;
        os << "degenerate parametrization of " << surface.describe() << " at theta=" << theta << ", phi=" << phi;
        throw SingularityError(os.str());
    }
    out.first_inv = out.first.inverse();
    out.area_element = std::sqrt(det);
    const Vec3 n = p.xt.cross(p.xp);  // annihilates both tangents: a covector
    const Vec3 raised = geo.g_inv * n;
    out.normal = raised / std::sqrt(n.dot(raised));
    out.normal_covector = g * out.normal;
    auto second = [&](const Vec3& xab, const Vec3& xa, const Vec3& xb) {
        Vec3 acc = xab;
        for (int k = 0; k < 3; ++k) acc[k] += xa.dot(geo.christoffel[k] * xb);
        return -out.normal_covector.dot(acc);
    };
    const double ii_tt = second(p.xtt, p.xt, p.xt);
    const double ii_tp = second(p.xtp, p.xt, p.xp);
    const double ii_pp = second(p.xpp, p.xp, p.xp);
    out.second << ii_tt, ii_tp, ii_tp, ii_pp;
    out.H = (out.first_inv.cwiseProduct(out.second)).sum();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> eig(out.second, out.first);
    out.kappa1 = eig.eigenvalues()[0];
    out.kappa2 = eig.eigenvalues()[1];
    const double ric_nn = out.normal.dot(geo.ricci * out.normal);
    out.K = 0.5 * geo.scalar_curvature - ric_nn + out.second.determinant() / det;
    return out;
}

PrincipalBounds principal_bounds(const SurfaceFamily& family, double r, double k1, double k2, int n) {
    if (n < 2) throw ArgumentError("principal_bounds grid needs n >= 2");
    const SurfaceModel surface = rescale_surface(family, r);
    const Metric flat = make_flat();
    const std::size_t rows = static_cast<std::size_t>(n + 1), cols = static_cast<std::size_t>(n);
    std::vector<double> lo(rows * cols), hi(rows * cols);
    kernels::map_parallel(rows * cols, [&](std::size_t idx) {
        const double theta = regular_theta(pi * static_cast<double>(idx / cols) / n);
        const double phi = 2.0 * pi * static_cast<double>(idx % cols) / n;
        const FundamentalForms f = fundamental_forms(surface, *flat, theta, phi);
        lo[idx] = f.kappa1;
        hi[idx] = f.kappa2;
    });
    PrincipalBounds out;
    out.min_kappa = *std::min_element(lo.begin(), lo.end());
    out.max_kappa = *std::max_element(hi.begin(), hi.end());
    out.satisfies = k1 < out.min_kappa && out.max_kappa < k2 && k1 > 0.0;
    return out;
}

std::vector<ParameterNode> surface_rule(int n_theta, int n_phi) {
    const numerics::QuadratureRule t = numerics::gauss_legendre(n_theta, 0.0, pi);
    std::vector<ParameterNode> nodes;
    nodes.reserve(static_cast<std::size_t>(n_theta * n_phi));
    const double dphi = 2.0 * pi / n_phi;
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j)
            nodes.push_back({t.nodes[static_cast<std::size_t>(i)], (j + 0.5) * dphi,
                             t.weights[static_cast<std::size_t>(i)] * dphi});
    return nodes;
}

SurfaceTotals surface_totals(const SurfaceModel& surface, const MetricModel& metric, int n_theta, int n_phi,
                             Side side) {
    const std::vector<ParameterNode> nodes = surface_rule(n_theta, n_phi);
    std::vector<double> area(nodes.size()), curv(nodes.size()), K(nodes.size());
    kernels::map_parallel(nodes.size(), [&](std::size_t i) {
        const FundamentalForms f = fundamental_forms(surface, metric, nodes[i].theta, nodes[i].phi, side);
        area[i] = nodes[i].weight * f.area_element;
        curv[i] = area[i] * f.K;
        K[i] = f.K;
    });
    SurfaceTotals out;
    out.area = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return area[i]; });
    out.gauss_bonnet = kernels::sum_serial(nodes.size(), [&](std::size_t i) { return curv[i]; }) / (2.0 * pi);
    out.min_K = *std::min_element(K.begin(), K.end());
    return out;
}

}  // namespace mass_lab
