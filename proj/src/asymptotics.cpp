#include "mass_lab/asymptotics.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"

#include <cmath>
#include <sstream>

namespace mass_lab {

std::string to_string(AdmMethod method) {
    return method == AdmMethod::surface_integral ? "surface-integral" : "conformal-flux";
}

std::vector<SphereNode> sphere_rule(int n_theta, int n_phi) {
    const auto& gl = numerics::gauss_legendre(n_theta);
    std::vector<SphereNode> nodes;
    nodes.reserve(static_cast<std::size_t>(n_theta * n_phi));
    const double dphi = 2.0 * pi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double c = gl.nodes[static_cast<std::size_t>(i)];  // cos(theta)
        const double s = std::sqrt(1.0 - c * c);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = (j + 0.5) * dphi;
            nodes.push_back({Vec3(s * std::cos(phi), s * std::sin(phi), c),
                             gl.weights[static_cast<std::size_t>(i)] * dphi});
        }
    }
    return nodes;
}

double adm_surface_integral(const MetricModel& metric, double radius, AdmMethod method, int n_theta, int n_phi) {
    const std::vector<SphereNode> nodes = sphere_rule(n_theta, n_phi);
    const double r2 = radius * radius;
    if (method == AdmMethod::conformal_flux) {
        const ScalarField* phi = metric.conformal_factor();
        if (!phi) throw CapabilityError("conformal-flux ADM mass needs a conformally flat model");
        const double flux = kernels::sum_parallel(nodes.size(), [&](std::size_t i) {
            const Vec3 x = radius * nodes[i].direction;
            return nodes[i].weight * r2 * phi->gradient(x).dot(nodes[i].direction);
        });
        return -flux / (2.0 * pi);
    }
    const double total = kernels::sum_parallel(nodes.size(), [&](std::size_t n) {
        const Vec3& nu = nodes[n].direction;
        const MetricJet jet = metric.jet(radius * nu, Side::exterior);
        double integrand = 0.0;
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int i = 0; i < 3; ++i) v += jet.dg[i](i, j) - jet.dg[j](i, i);
            integrand += v * nu[j];
        }
        return nodes[n].weight * r2 * integrand;
    });
    return total / (16.0 * pi);
}

AdmResult adm_mass(const MetricModel& metric, double radius, AdmMethod method, bool extrapolate,
                   const AdmOptions& options) {
    if (!metric.asymptotically_flat()) throw CapabilityError(metric.describe() + " has no asymptotic end");
    if (!(radius > metric.asymptotic_radius()) || !(radius > metric.excluded_radius())) {
        std::ostringstream os;
        os << "ADM radius " << radius << " is not inside the asymptotic chart of " << metric.describe();
        throw DomainError(os.str());
    }
    AdmResult result;
    const int levels = extrapolate ? std::max(2, options.levels) : 1;
    double r = radius;
    for (int k = 0; k < levels; ++k) {
        result.radii.push_back(r);
        result.values.push_back(adm_surface_integral(metric, r, method, options.n_theta, options.n_phi));
        r *= options.ratio;
    }
    if (extrapolate) {
        const numerics::RichardsonResult rich =
            numerics::richardson(result.values, options.ratio, options.first_order);
        result.mass = rich.estimate;
        result.extrapolation_error = rich.error;
        result.extrapolated = true;
    } else {
        result.mass = result.values.front();
    }
    const DecayReport decay = decay_report(metric, {radius, 2.0 * radius, 4.0 * radius});
    result.curvature_warning = !decay.curvature_integrable;
    return result;
}

DecayReport decay_report(const MetricModel& metric, const std::vector<double>& radii, int n_theta, int n_phi) {
    if (radii.size() < 3) throw ArgumentError("decay_report needs at least three radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw ArgumentError("decay_report radii must be increasing");
    if (!(radii.front() > metric.asymptotic_radius()))
        throw DomainError("decay_report radii must lie in the asymptotic chart");
    DecayReport rep;
    rep.radii = radii;
    const std::vector<SphereNode> nodes = sphere_rule(n_theta, n_phi);
    for (double r : radii) {
        double s0 = 0, s1 = 0, s2 = 0, sr = 0;
        for (const SphereNode& node : nodes) {
            const Vec3 x = r * node.direction;
            const MetricJet jet = metric.jet(x);
            s0 = std::max(s0, (jet.g - Mat3::Identity()).norm());
            double d1 = 0, d2 = 0;
            for (int k = 0; k < 3; ++k) {
                d1 += jet.dg[k].squaredNorm();
                for (int l = 0; l < 3; ++l) d2 += jet.ddg[k][l].squaredNorm();
            }
            s1 = std::max(s1, std::sqrt(d1));
            s2 = std::max(s2, std::sqrt(d2));
            sr = std::max(sr, std::abs(geometry_from_jet(x, jet).scalar_curvature));
        }
        rep.sup_norms[0].push_back(s0);
        rep.sup_norms[1].push_back(s1);
        rep.sup_norms[2].push_back(s2);
        rep.sup_curvature.push_back(sr);
    }
    std::vector<double> logr;
    for (double r : radii) logr.push_back(std::log(r));
    auto fit = [&](const std::vector<double>& sup, double vanish) -> std::optional<double> {
        bool zero = true;
        for (double v : sup) zero = zero && v <= vanish;
        if (zero) return std::nullopt;
        std::vector<double> logs;
        for (double v : sup) logs.push_back(std::log(std::max(v, 1e-300)));
        return -numerics::least_squares_line(logr, logs).slope;
    };
    rep.exact = true;
    rep.tau = std::numeric_limits<double>::infinity();
    for (int q = 0; q < 3; ++q) {
        rep.orders[static_cast<std::size_t>(q)] = fit(rep.sup_norms[static_cast<std::size_t>(q)], 0.0);
        if (auto o = rep.orders[static_cast<std::size_t>(q)]) {
            rep.exact = false;
            rep.tau = std::min(rep.tau, *o - q);  // |d^q g| ~ r^-(tau + q)
        }
    }
    if (rep.exact) rep.tau = 0.0;
    rep.tau_admissible = rep.exact || rep.tau > 0.5;
    // Scalar curvature below roundoff counts as vanishing.
    rep.curvature_order = fit(rep.sup_curvature, 1e-10);
    rep.curvature_integrable = !rep.curvature_order || *rep.curvature_order > 3.0;
    return rep;
}

VectorFieldModel::VectorFieldModel(std::function<Vec3(const Vec3&)> components, double decay_order,
                                   std::string label)
    : components_(std::move(components)), decay_order_(decay_order), label_(std::move(label)) {}

VectorFieldModel VectorFieldModel::zero() { return {}; }

Vec3 VectorFieldModel::operator()(const Vec3& x) const {
    if (!components_) return Vec3::Zero();
    const Vec3 v = components_(x);
    if (!v.allFinite()) throw DomainError("vector field " + label_ + " is not finite at a sample point");
    return v;
}

double VectorFieldModel::divergence(const MetricModel& metric, const Vec3& x, Side side) const {
    if (!components_) return 0.0;
    const double h = default_fd_step(x);
    auto density = [&](const Vec3& p, int i) {
        return std::sqrt(metric.jet(p, side).g.determinant()) * (*this)(p)[i];
    };
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Vec3 e = h * Vec3::Unit(i);
        div += (density(x + e, i) - density(x - e, i)) / (2.0 * h);
    }
    return div / std::sqrt(metric.jet(x, side).g.determinant());
}

double VectorFieldModel::norm(const MetricModel& metric, const Vec3& x, Side side) const {
    const Vec3 v = (*this)(x);
    return std::sqrt(v.dot(metric.jet(x, side).g * v));
}

VectorFieldModel::DecayCheck VectorFieldModel::check_decay(const std::vector<double>& radii) const {
    DecayCheck out;
    if (!components_) {
        out.fitted_order = std::numeric_limits<double>::infinity();
        return out;
    }
    const std::vector<SphereNode> nodes = sphere_rule(8, 16);
    std::vector<double> logr, logs;
    for (double r : radii) {
        double sup = 0.0;
        for (const SphereNode& n : nodes) sup = std::max(sup, (*this)(r * n.direction).norm());
        if (sup == 0.0) continue;
        logr.push_back(std::log(r));
        logs.push_back(std::log(sup));
    }
    if (logr.size() < 2) {
        out.fitted_order = std::numeric_limits<double>::infinity();
        return out;
    }
    out.fitted_order = -numerics::least_squares_line(logr, logs).slope;
    out.consistent = out.fitted_order >= decay_order_ - 0.05;
    return out;
}

}  // namespace mass_lab
