#include "mass_lab/fillins.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mass_lab {

std::string to_string(FillinKind kind) {
    switch (kind) {
        case FillinKind::euclidean: return "euclidean";
        case FillinKind::conformal: return "conformal";
        case FillinKind::custom: return "custom";
    }
    return "?";
}

namespace {

double form_difference(const FundamentalForms& a, const FundamentalForms& b) {
    return (a.first - b.first).cwiseAbs().maxCoeff();
}

void require_positive_curvature(const FundamentalForms& f, const SurfaceModel& sigma, double theta) {
    if (f.K > 0.0) return;
    std::ostringstream os;
    os << "Gauss curvature non-positive (" << f.K << ") on " << sigma.describe() << " at theta=" << theta
       << "; no Euclidean fill-in";
    throw PreconditionError(os.str());
}

void finish(CornerJump& c) {
    c.jump.resize(c.H.size());
    for (std::size_t i = 0; i < c.H.size(); ++i) {
        c.jump[i] = c.H_fillin[i] - c.H[i];
        c.max_abs_jump = std::max(c.max_abs_jump, std::abs(c.jump[i]));
    }
}

}  // namespace

std::pair<FillinModel, CornerJump> euclidean_fillin(const SurfaceModel& sigma, const Metric& metric, int n_theta) {
    const EmbeddingResult emb = embed_revolution(RevolutionMetric::induced(sigma, metric));
    const Metric flat = make_flat();
    FillinModel model;
    model.kind = FillinKind::euclidean;
    model.label = "euclidean(" + sigma.describe() + ")";
    model.metric = flat;
    model.boundary = emb.surface;
    model.ball_radius = emb.round_radius;

    CornerJump corner;
    const numerics::QuadratureRule rule = numerics::gauss_legendre(n_theta, 0.0, pi);
    for (double theta : rule.nodes) {
        for (double phi : {0.0, 1.0}) {
            const FundamentalForms host = fundamental_forms(sigma, *metric, theta, phi);
            require_positive_curvature(host, sigma, theta);
            const FundamentalForms image = fundamental_forms(emb.surface, *flat, theta, phi);
            corner.isometry_residual = std::max(corner.isometry_residual, form_difference(host, image));
            if (phi == 0.0) {
                corner.theta.push_back(theta);
                corner.H.push_back(host.H);
                corner.H_fillin.push_back(image.H);
            }
        }
    }
    finish(corner);
    model.isometry_residual = corner.isometry_residual;
    return {std::move(model), std::move(corner)};
}

std::pair<FillinModel, CornerJump> glued_fillin(const std::shared_ptr<const GluedMetric>& glued, int n_theta) {
    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(glued->interface_radius());
    FillinModel model;
    model.kind = FillinKind::custom;
    model.label = glued->fillin()->describe();
    model.metric = glued->interior();
    model.boundary = sigma;
    CornerJump corner;
    const numerics::QuadratureRule rule = numerics::gauss_legendre(n_theta, 0.0, pi);
    for (double theta : rule.nodes) {
        const FundamentalForms out = fundamental_forms(sigma, *glued, theta, 0.0, Side::exterior);
        const FundamentalForms in = fundamental_forms(sigma, *glued, theta, 0.0, Side::interior);
        corner.theta.push_back(theta);
        corner.H.push_back(out.H);
        corner.H_fillin.push_back(in.H);
        corner.isometry_residual = std::max(corner.isometry_residual, form_difference(out, in));
    }
    finish(corner);
    model.isometry_residual = corner.isometry_residual;
    return {std::move(model), std::move(corner)};
}

namespace {

// A harmonic function used as a conformal factor.
class HarmonicFactor final : public ScalarField {
public:
    explicit HarmonicFactor(HarmonicField field) : field_(std::move(field)) {}
    [[nodiscard]] double value(const Vec3& x) const override { return field_.sample(x, Side::exterior).u; }
    [[nodiscard]] Vec3 gradient(const Vec3& x) const override { return field_.sample(x, Side::exterior).grad; }
    [[nodiscard]] Mat3 hessian(const Vec3& x) const override { return field_.sample(x, Side::exterior).hess; }

private:
    HarmonicField field_;
};

}  // namespace

ConformalFillin conformal_fillin(const Metric& metric, const SurfaceModel& sigma, const SolverOptions& options,
                                 int n_theta) {
    const HarmonicField green = solve_green(metric, sigma, options);
    ConformalFillin out;
    out.dG_dmu = green_normal_derivative(green);
    const Metric deformed =
        make_conformal_deformation(metric, std::make_shared<HarmonicFactor>(green), "G^4 " + metric->describe());
    out.model.kind = FillinKind::conformal;
    out.model.label = "conformal(" + sigma.describe() + ")";
    out.model.metric = deformed;
    out.model.boundary = sigma;
    out.model.green = green;
    const numerics::QuadratureRule rule = numerics::gauss_legendre(n_theta, 0.0, pi);
    for (double theta : rule.nodes) {
        const FundamentalForms host = fundamental_forms(sigma, *metric, theta, 0.3);
        // The fill-in's outward normal points away from infinity, opposite to the host normal.
        const FundamentalForms star = fundamental_forms(sigma, *deformed, theta, 0.3);
        out.theta.push_back(theta);
        out.H.push_back(host.H);
        out.H_formula.push_back(-host.H - 4.0 * out.dG_dmu);
        out.H_direct.push_back(-star.H);
        out.max_difference = std::max(out.max_difference, std::abs(out.H_formula.back() - out.H_direct.back()));
        out.model.isometry_residual = std::max(out.model.isometry_residual, form_difference(host, star));
    }
    return out;
}

Metric matched_cap(const Metric& exterior, double r0) {
    const RadialJets ab = exterior->radial_jets(r0);
    const double sb = std::sqrt(ab.B.v);
    const double W = r0 * sb;
    const double Wt = (sb + r0 * ab.B.d1 / (2.0 * sb)) / std::sqrt(ab.A.v);
    if (!(Wt > 0.0 && Wt < 1.0)) {
        std::ostringstream os;
        os << "no sphere cap matches the mean curvature at r0=" << r0 << " (dR/dt=" << Wt << ")";
        throw PreconditionError(os.str());
    }
    return make_sphere_cap(W / std::sqrt(1.0 - Wt * Wt));
}

// ---------------------------------------------------------------------------
// Mollification

namespace {

constexpr int mollifier_nodes = 64;
constexpr std::size_t table_nodes = 801;

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

double bump_integral() {
    static const double z = numerics::integrate_adaptive(bump, -1.0, 1.0, 1e-15);
    return z;
}

// x^4 (35 - 84 x + 70 x^2 - 20 x^3): 0 -> 1 with three vanishing derivatives at both ends.
Jet smoothstep(double x) {
    const double x2 = x * x, x3 = x2 * x;
    const double y = 1.0 - x;
    return {x2 * x2 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x3), 140.0 * x3 * y * y * y,
            420.0 * x2 * y * y * (1.0 - 2.0 * x)};
}

}  // namespace

double mollifier(double s) { return bump(s) / bump_integral(); }

MollifiedMetric::MollifiedMetric(std::shared_ptr<const GluedMetric> glued, double delta)
    : glued_(std::move(glued)), delta_(delta) {
    if (!glued_) throw ArgumentError("mollification needs a glued metric");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("collar half-width must lie in (0, 1)");
    const double reach = delta + delta * delta;
    const double inner_limit = std::abs(glued_->collar_limit(Side::interior));
    if (!(2.0 * reach < inner_limit)) {
        std::ostringstream os;
        os << "collar half-width " << delta << " too large for the fill-in collar of depth " << inner_limit;
        throw ArgumentError(os.str());
    }
    const double r0 = glued_->interface_radius();
    outer_radius_ = glued_->chart_radius(delta);
    inner_radius_ = glued_->chart_radius(-delta);
    const double t_span = 1.05 * reach;
    for (const Side side : {Side::interior, Side::exterior}) {
        const double sign = side == Side::exterior ? 1.0 : -1.0;
        const double r_end = glued_->chart_radius(sign * t_span);
        const Metric& m = glued_->side_metric(side);
        Table tab;
        std::vector<double> r(table_nodes), t(table_nodes);
        for (std::size_t i = 0; i < table_nodes; ++i)
            r[i] = r0 + (r_end - r0) * static_cast<double>(i) / static_cast<double>(table_nodes - 1);
        t[0] = 0.0;
        for (std::size_t i = 1; i < table_nodes; ++i)
            t[i] = t[i - 1] + numerics::integrate_gl([&](double s) { return std::sqrt(m->radial_jets(s).A.v); },
                                                     r[i - 1], r[i], 8);
        if (side == Side::interior) {
            std::reverse(r.begin(), r.end());
            std::reverse(t.begin(), t.end());
        }
        tab.r = r;
        tab.t = t;
        for (double ri : r) {
            const RadialJets ab = m->radial_jets(ri);
            tab.A.push_back(ab.A.v);
            tab.dA.push_back(ab.A.d1);
        }
        (side == Side::exterior ? outer_ : inner_) = std::move(tab);
    }
}

std::string MollifiedMetric::describe() const {
    std::ostringstream os;
    os << "mollified(" << glued_->describe() << ", delta=" << delta_ << ")";
    return os.str();
}

std::size_t MollifiedMetric::locate(const std::vector<double>& nodes, double x) {
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    return std::min(i, nodes.size() - 2);
}

double MollifiedMetric::t_of_r(const Table& tab, double r) {
    const std::size_t i = locate(tab.r, r);
    auto sample = [&](std::size_t k) {
        const double sa = std::sqrt(tab.A[k]);
        return numerics::HermiteSample{tab.t[k], sa, tab.dA[k] / (2.0 * sa)};
    };
    return numerics::quintic_hermite(tab.r[i], sample(i), tab.r[i + 1], sample(i + 1), r).v;
}

double MollifiedMetric::r_of_t(const Table& tab, double t) {
    const std::size_t i = locate(tab.t, t);
    auto sample = [&](std::size_t k) {
        const double sa = std::sqrt(tab.A[k]);
        return numerics::HermiteSample{tab.t[k], sa, tab.dA[k] / (2.0 * sa)};
    };
    const numerics::HermiteSample a = sample(i), b = sample(i + 1);
    // Newton on the interpolated t(r) of this cell.
    double r = tab.r[i] + (tab.r[i + 1] - tab.r[i]) * (t - tab.t[i]) / (tab.t[i + 1] - tab.t[i]);
    for (int k = 0; k < 6; ++k) {
        const numerics::HermiteSample h = numerics::quintic_hermite(tab.r[i], a, tab.r[i + 1], b, r);
        const double step = (h.v - t) / h.d1;
        r -= step;
        if (std::abs(step) <= 1e-16 * std::abs(r)) break;
    }
    return r;
}

Jet MollifiedMetric::raw_warp(double t) const {
    const Table& tab = table(t);
    if (t < tab.t.front() || t > tab.t.back()) return glued_->warp(t);
    return glued_->warp_at_radius(r_of_t(tab, t), t >= 0.0 ? Side::exterior : Side::interior);
}

double MollifiedMetric::collar_radius(double t) const {
    const Table& tab = table(t);
    if (t < tab.t.front() || t > tab.t.back()) return glued_->chart_radius(t);
    return r_of_t(tab, t);
}

double MollifiedMetric::collar_distance(double r) const {
    const double r0 = glued_->interface_radius();
    const Table& tab = r >= r0 ? outer_ : inner_;
    if (r < tab.r.front() || r > tab.r.back()) return glued_->collar_t(r, r >= r0 ? Side::exterior : Side::interior);
    return t_of_r(tab, r);
}

Jet MollifiedMetric::warp(double t) const {
    if (std::abs(t) >= delta_) return raw_warp(t);
    const double eps = core();
    // M = integral of W(t - eps s) phi(s) ds, split where the argument crosses the interface.
    const double split = t / eps;
    Jet M;
    auto accumulate = [&](double a, double b) {
        const numerics::QuadratureRule& rule = numerics::gauss_legendre(mollifier_nodes);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double s = mid + half * rule.nodes[k];
            const double w = half * rule.weights[k] * mollifier(s);
            const Jet W = raw_warp(t - eps * s);
            M.v += w * W.v;
            M.d1 += w * W.d1;
            M.d2 += w * W.d2;
        }
    };
    // Panels also break at s = 0: one 64-point panel over (-1, 1) resolves the bump only to ~1e-11.
    if (std::abs(split) < 1.0) {
        const double lo = std::min(0.0, split), hi = std::max(0.0, split);
        accumulate(-1.0, lo);
        if (hi > lo) accumulate(lo, hi);
        accumulate(hi, 1.0);
        const double kink =
            glued_->warp_at_radius(glued_->interface_radius(), Side::exterior).d1 - glued_->warp_at_radius(glued_->interface_radius(), Side::interior).d1;
        M.d2 += kink * mollifier(split) / eps;
    } else {
        accumulate(-1.0, 0.0);
        accumulate(0.0, 1.0);
    }
    if (std::abs(t) <= eps) return M;
    const Jet W = raw_warp(t);
    const double sign = t > 0.0 ? 1.0 : -1.0;
    const double width = delta_ - eps;
    const Jet S = smoothstep((std::abs(t) - eps) / width);
    const double chi = 1.0 - S.v;
    const double chi1 = -S.d1 * sign / width;
    const double chi2 = -S.d2 / (width * width);
    const Jet D{M.v - W.v, M.d1 - W.d1, M.d2 - W.d2};
    return {W.v + chi * D.v, W.d1 + chi * D.d1 + chi1 * D.v, W.d2 + chi * D.d2 + 2.0 * chi1 * D.d1 + chi2 * D.v};
}

double MollifiedMetric::collar_curvature(double t) const {
    const Jet W = warp(t);
    return 2.0 * (1.0 - W.d1 * W.d1) / (W.v * W.v) - 4.0 * W.d2 / W.v;
}

RadialJets MollifiedMetric::radial_jets(double r, Side side) const {
    const double r0 = glued_->interface_radius();
    if (r > outer_radius_ || r < inner_radius_ || r == 0.0) return glued_->radial_jets(r, side);
    const Side s = r > r0 ? Side::exterior : (r < r0 ? Side::interior : side);
    RadialJets ab = glued_->radial_jets(r, s);
    double t = collar_distance(r);
    if (r == r0) t = 0.0;
    if (std::abs(t) >= delta_) return ab;
    // At the interface itself pick the one-sided limit of t.
    const Jet W = warp(t);
    const double tr = std::sqrt(ab.A.v);
    const double trr = ab.A.d1 / (2.0 * tr);
    const double Wr = W.d1 * tr;
    const double Wrr = W.d2 * tr * tr + W.d1 * trr;
    const double r2 = r * r;
    ab.B.v = W.v * W.v / r2;
    ab.B.d1 = 2.0 * W.v * Wr / r2 - 2.0 * W.v * W.v / (r2 * r);
    ab.B.d2 = 2.0 * (Wr * Wr + W.v * Wrr) / r2 - 8.0 * W.v * Wr / (r2 * r) + 6.0 * W.v * W.v / (r2 * r2);
    return ab;
}

MetricJet MollifiedMetric::jet(const Vec3& x, Side side) const {
    const double r = x.norm();
    if (r > outer_radius_ || r < inner_radius_) return glued_->jet(x, side);
    return radial_metric_jet(x, radial_jets(r, side));
}

std::shared_ptr<const MollifiedMetric> mollify(std::shared_ptr<const GluedMetric> glued, double delta) {
    return std::make_shared<MollifiedMetric>(std::move(glued), delta);
}

// ---------------------------------------------------------------------------
// Collar integrals

namespace {

double collar_value(const MollifiedMetric& m, const HarmonicField& u, bool smoothed_field, int n_angle,
                    double rel_tol) {
    const numerics::QuadratureRule ang = numerics::gauss_legendre(n_angle, 0.0, pi);
    auto integrand = [&](double t) {
        const double r = m.collar_radius(t);
        const Side side = t >= 0.0 ? Side::exterior : Side::interior;
        double shell = 0.0;
        for (std::size_t j = 0; j < ang.nodes.size(); ++j) {
            const double a = ang.nodes[j];
            const Vec3 x(r * std::cos(a), r * std::sin(a), 0.0);
            const double grad = smoothed_field ? field_geometry(u, x, u.side_of(x)).grad_norm
                                               : field_geometry(u, x, side).grad_norm;
            shell += ang.weights[j] * std::sin(a) * grad;
        }
        const Jet W = m.warp(t);
        const double R = 2.0 * (1.0 - W.d1 * W.d1) / (W.v * W.v) - 4.0 * W.d2 / W.v;
        return 2.0 * pi * shell * W.v * W.v * R;
    };
    const double d = m.delta(), e = m.core();
    // Pieces can cancel to zero, so the target is absolute, scaled by a rough core value.
    const double rough = numerics::integrate_gl(integrand, -e, 0.0, 16) + numerics::integrate_gl(integrand, 0.0, e, 16);
    const double W0 = m.warp(0.0).v;
    const double abs_tol = rel_tol * std::max(std::abs(rough), W0 * W0);
    const std::array<double, 5> cuts{-d, -e, 0.0, e, d};
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
        total += numerics::integrate_adaptive_abs(integrand, cuts[k], cuts[k + 1], 0.25 * abs_tol);
    return total;
}

}  // namespace

CollarResult collar_integral(const std::shared_ptr<const GluedMetric>& glued, const HarmonicField& field,
                             const std::vector<double>& deltas, const CollarOptions& options) {
    if (deltas.empty()) throw ArgumentError("collar integral needs at least one delta");
    CollarResult out;
    out.delta = deltas;
    const double r0 = glued->interface_radius();
    for (double delta : deltas) {
        const auto m = mollify(glued, delta);
        out.integral.push_back(collar_value(*m, field, false, options.n_angle, options.rel_tol));
        if (options.resolve) {
            // Fine mesh across the collar only: a quarter of the core width per step.
            SolverOptions so;
            const double speed = std::max(std::sqrt(glued->radial_jets(r0, Side::exterior).A.v),
                                          std::sqrt(glued->radial_jets(r0, Side::interior).A.v));
            so.refine_lo = m->collar_radius(-delta);
            so.refine_hi = m->collar_radius(delta);
            so.refine_step = 0.25 * m->core() / (so.refine_hi * speed);
            const HarmonicField ud = solve_asymptotic(m, InnerCondition::none(), so);
            // Mesh profiles are only C2 at their nodes; tighter targets stall on those kinks.
            out.resolved.push_back(collar_value(*m, ud, true, options.n_angle, std::max(options.rel_tol, 1e-6)));
        }
    }

    // 2 * integral of (H_fillin - H) |grad u| over the interface.
    const SurfaceModel sigma = SurfaceModel::coordinate_sphere(r0).with_polar_axis(0);
    const std::vector<ParameterNode> nodes = surface_rule(24, 48);
    out.expected = 2.0 * kernels::sum_serial(nodes.size(), [&](std::size_t i) {
        const FundamentalForms fe = fundamental_forms(sigma, *glued, nodes[i].theta, nodes[i].phi, Side::exterior);
        const FundamentalForms fi = fundamental_forms(sigma, *glued, nodes[i].theta, nodes[i].phi, Side::interior);
        const double grad = field_geometry(field, fe.point, Side::exterior).grad_norm;
        return (fi.H - fe.H) * grad * fe.area_element * nodes[i].weight;
    });

    const std::vector<double>& v = out.integral;
    for (std::size_t i = 2; i < v.size(); ++i)
        if ((v[i] - v[i - 1]) * (v[i - 1] - v[i - 2]) < 0.0) out.monotone = false;
    bool geometric = v.size() >= 2;
    const double ratio = v.size() >= 2 ? deltas[0] / deltas[1] : 0.0;
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (std::abs(deltas[i - 1] / deltas[i] - ratio) > 1e-9 * ratio) geometric = false;
    out.extrapolant.push_back(v.front());
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!geometric || !out.monotone || !(ratio > 1.0)) {
            out.extrapolant.push_back(v[k]);
            continue;
        }
        const std::span<const double> head(v.data(), k + 1);
        out.extrapolant.push_back(numerics::richardson(head, ratio, 1).estimate);
    }
    if (out.monotone && geometric && ratio > 1.0) out.limit = out.extrapolant.back();
    return out;
}

}  // namespace mass_lab
