#include "mass_lab/metric_models.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/numerics.hpp"

#include <cmath>
#include <sstream>

namespace mass_lab {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::flat: return "flat";
        case MetricKind::schwarzschild: return "schwarzschild";
        case MetricKind::conformally_flat: return "conformally-flat";
        case MetricKind::spherically_symmetric: return "spherically-symmetric";
        case MetricKind::glued: return "glued";
        case MetricKind::conformal_deformation: return "conformal-deformation";
    }
    return "unknown";
}

namespace {

// Unit radial direction; the origin gets an arbitrary but fixed direction.
Vec3 unit_radial(const Vec3& x, double r) { return r > 0.0 ? Vec3(x / r) : Vec3::UnitX(); }

}  // namespace

double RadialScalarField::value(const Vec3& x) const { return profile_(x.norm()).v; }

Vec3 RadialScalarField::gradient(const Vec3& x) const {
    const double r = x.norm();
    return profile_(r).d1 * unit_radial(x, r);
}

Mat3 RadialScalarField::hessian(const Vec3& x) const {
    const double r = x.norm();
    const Jet p = profile_(r);
    const Vec3 n = unit_radial(x, r);
    const Mat3 nn = n * n.transpose();
    if (r == 0.0) return p.d2 * Mat3::Identity();
    return p.d2 * nn + (p.d1 / r) * (Mat3::Identity() - nn);
}

void MetricModel::check_point(const Vec3& x) const {
    if (!x.allFinite()) throw DomainError("non-finite evaluation point");
    const double r = x.norm();
    if (!origin_in_chart() && r == 0.0) throw DomainError("the origin is not in the chart of " + describe());
    if (excluded_radius() > 0.0 && r <= excluded_radius()) {
        std::ostringstream os;
        os << "point at coordinate radius " << r << " lies outside the chart of " << describe()
           << " (requires r > " << excluded_radius() << ")";
        throw DomainError(os.str());
    }
}

RadialJets MetricModel::radial_jets(double, Side) const {
    throw CapabilityError(describe() + " has no radial form");
}

MetricJet radial_metric_jet(const Vec3& x, const RadialJets& ab) {
    const double r = x.norm();
    MetricJet out;
    if (r == 0.0) {
        // Regular radial metrics have A = B at the origin.
        out.g = ab.B.v * Mat3::Identity();
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) out.ddg[k][l] = (k == l ? ab.B.d2 : 0.0) * Mat3::Identity();
        return out;
    }
    const Vec3 n = x / r;
    const Mat3 I = Mat3::Identity();
    const Mat3 P = I - n * n.transpose();
    const double C = ab.A.v - ab.B.v;
    const double dC = ab.A.d1 - ab.B.d1;
    const double ddC = ab.A.d2 - ab.B.d2;
    out.g = ab.B.v * I + C * n * n.transpose();
    // dn_i/dx_k = P_ik / r
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out.dg[k](i, j) = ab.B.d1 * n[k] * I(i, j) + dC * n[k] * n[i] * n[j] +
                                  C * (P(i, k) * n[j] + n[i] * P(j, k)) / r;
    const double r2 = r * r;
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    // d_l (n_k n_i n_j)
                    const double d_nnn = (P(k, l) * n[i] * n[j] + n[k] * P(i, l) * n[j] + n[k] * n[i] * P(j, l)) / r;
                    // d_l d_k n_i = -(P_il n_k + n_i P_kl + P_ik n_l) / r^2
                    auto dd_n = [&](int a, int b, int c) {  // d_c d_b n_a
                        return -(P(a, c) * n[b] + n[a] * P(b, c) + P(a, b) * n[c]) / r2;
                    };
                    const double sym = (P(i, k) * n[j] + n[i] * P(j, k)) / r;
                    const double d_sym = dd_n(i, k, l) * n[j] + P(i, k) * P(j, l) / r2 + P(i, l) * P(j, k) / r2 +
                                         n[i] * dd_n(j, k, l);
                    out.ddg[k][l](i, j) = ab.B.d2 * n[l] * n[k] * I(i, j) + ab.B.d1 * P(k, l) / r * I(i, j) +
                                          ddC * n[l] * n[k] * n[i] * n[j] + dC * d_nnn + dC * n[l] * sym +
                                          C * d_sym;
                }
    return out;
}

namespace {

class ConformallyFlatMetric final : public MetricModel {
public:
    ConformallyFlatMetric(MetricKind kind, JetFn phi, std::string label, double decay, double excluded,
                          bool origin, bool asymptotic)
        : kind_(kind),
          phi_(std::move(phi)),
          label_(std::move(label)),
          decay_(decay),
          excluded_(excluded),
          origin_(origin),
          asymptotic_(asymptotic) {}

    [[nodiscard]] MetricKind kind() const override { return kind_; }
    [[nodiscard]] std::string describe() const override { return label_; }
    [[nodiscard]] double decay_rate() const override { return decay_; }
    [[nodiscard]] double excluded_radius() const override { return excluded_; }
    [[nodiscard]] bool origin_in_chart() const override { return origin_; }
    [[nodiscard]] bool asymptotically_flat() const override { return asymptotic_; }
    [[nodiscard]] bool is_radial() const override { return true; }
    [[nodiscard]] const ScalarField* conformal_factor() const override { return &phi_; }

    [[nodiscard]] MetricJet jet(const Vec3& x, Side) const override {
        const double r = x.norm();
        const Jet p = phi_.radial(r);
        const Vec3 n = unit_radial(x, r);
        const Vec3 grad = p.d1 * n;
        Mat3 hess = p.d2 * n * n.transpose();
        if (r > 0.0) hess += (p.d1 / r) * (Mat3::Identity() - n * n.transpose());
        else hess = p.d2 * Mat3::Identity();
        const double p2 = p.v * p.v, p3 = p2 * p.v;
        MetricJet out;
        out.g = p2 * p2 * Mat3::Identity();
        for (int k = 0; k < 3; ++k) {
            out.dg[k] = 4.0 * p3 * grad[k] * Mat3::Identity();
            for (int l = 0; l < 3; ++l)
                out.ddg[k][l] = (12.0 * p2 * grad[k] * grad[l] + 4.0 * p3 * hess(k, l)) * Mat3::Identity();
        }
        return out;
    }

    [[nodiscard]] RadialJets radial_jets(double r, Side) const override {
        const Jet p = phi_.radial(r);
        const double p2 = p.v * p.v, p3 = p2 * p.v;
        const Jet a{p2 * p2, 4.0 * p3 * p.d1, 12.0 * p2 * p.d1 * p.d1 + 4.0 * p3 * p.d2};
        return {a, a};
    }

private:
    MetricKind kind_;
    RadialScalarField phi_;
    std::string label_;
    double decay_;
    double excluded_;
    bool origin_;
    bool asymptotic_;
};

class SphericallySymmetricMetric final : public MetricModel {
public:
    SphericallySymmetricMetric(JetFn A, JetFn B, std::string label, double decay, double excluded, bool origin)
        : A_(std::move(A)), B_(std::move(B)), label_(std::move(label)), decay_(decay), excluded_(excluded),
          origin_(origin) {}

    [[nodiscard]] MetricKind kind() const override { return MetricKind::spherically_symmetric; }
    [[nodiscard]] std::string describe() const override { return label_; }
    [[nodiscard]] double decay_rate() const override { return decay_; }
    [[nodiscard]] double excluded_radius() const override { return excluded_; }
    [[nodiscard]] bool origin_in_chart() const override { return origin_; }
    [[nodiscard]] bool is_radial() const override { return true; }
    [[nodiscard]] MetricJet jet(const Vec3& x, Side side) const override {
        return radial_metric_jet(x, radial_jets(x.norm(), side));
    }
    [[nodiscard]] RadialJets radial_jets(double r, Side) const override { return {A_(r), B_(r)}; }

private:
    JetFn A_, B_;
    std::string label_;
    double decay_, excluded_;
    bool origin_;
};

class ConformalDeformation final : public MetricModel {
public:
    ConformalDeformation(Metric base, std::shared_ptr<const ScalarField> factor, std::string label)
        : base_(std::move(base)), factor_(std::move(factor)), label_(std::move(label)) {}

    [[nodiscard]] MetricKind kind() const override { return MetricKind::conformal_deformation; }
    [[nodiscard]] std::string describe() const override { return label_; }
    [[nodiscard]] double decay_rate() const override { return base_->decay_rate(); }
    [[nodiscard]] bool analytic_second_derivatives() const override { return base_->analytic_second_derivatives(); }
    void check_point(const Vec3& x) const override { base_->check_point(x); }
    [[nodiscard]] double excluded_radius() const override { return base_->excluded_radius(); }
    [[nodiscard]] bool origin_in_chart() const override { return base_->origin_in_chart(); }
    [[nodiscard]] double asymptotic_radius() const override { return base_->asymptotic_radius(); }

    [[nodiscard]] MetricJet jet(const Vec3& x, Side side) const override {
        const MetricJet b = base_->jet(x, side);
        const double G = factor_->value(x);
        const Vec3 dG = factor_->gradient(x);
        const Mat3 HG = factor_->hessian(x);
        const double G2 = G * G, G3 = G2 * G, G4 = G2 * G2;
        MetricJet out;
        out.g = G4 * b.g;
        for (int k = 0; k < 3; ++k) {
            out.dg[k] = 4.0 * G3 * dG[k] * b.g + G4 * b.dg[k];
            for (int l = 0; l < 3; ++l)
                out.ddg[k][l] = (12.0 * G2 * dG[k] * dG[l] + 4.0 * G3 * HG(k, l)) * b.g +
                                4.0 * G3 * (dG[k] * b.dg[l] + dG[l] * b.dg[k]) + G4 * b.ddg[k][l];
        }
        return out;
    }

private:
    Metric base_;
    std::shared_ptr<const ScalarField> factor_;
    std::string label_;
};

}  // namespace

ScaledMetric::ScaledMetric(Metric base, double scale) : base_(std::move(base)), scale_(scale) {
    if (!(scale > 0.0)) throw ArgumentError("metric pullback scale must be positive");
}

std::string ScaledMetric::describe() const {
    std::ostringstream os;
    os << base_->describe() << " pulled back by scale " << scale_;
    return os.str();
}

MetricJet ScaledMetric::jet(const Vec3& x, Side side) const {
    const MetricJet b = base_->jet(scale_ * x, side);
    const double s2 = scale_ * scale_, s3 = s2 * scale_, s4 = s2 * s2;
    MetricJet out;
    out.g = s2 * b.g;
    for (int k = 0; k < 3; ++k) {
        out.dg[k] = s3 * b.dg[k];
        for (int l = 0; l < 3; ++l) out.ddg[k][l] = s4 * b.ddg[k][l];
    }
    return out;
}

RadialJets ScaledMetric::radial_jets(double r, Side side) const {
    const RadialJets b = base_->radial_jets(scale_ * r, side);
    const double s2 = scale_ * scale_, s3 = s2 * scale_, s4 = s2 * s2;
    return {{s2 * b.A.v, s3 * b.A.d1, s4 * b.A.d2}, {s2 * b.B.v, s3 * b.B.d1, s4 * b.B.d2}};
}

namespace {

double areal(const MetricModel& m, double r) { return r * std::sqrt(m.radial_jets(r).B.v); }

}  // namespace

GluedMetric::GluedMetric(Metric exterior, Metric fillin, double interface_radius)
    : exterior_(std::move(exterior)), fillin_(std::move(fillin)), interface_radius_(interface_radius) {
    if (!exterior_ || !fillin_) throw ArgumentError("glued metric needs both an exterior and a fill-in");
    if (!exterior_->is_radial() || !fillin_->is_radial())
        throw CapabilityError("gluing is implemented for spherically symmetric models only");
    if (!(interface_radius > exterior_->excluded_radius()))
        throw DomainError("interface sphere lies outside the exterior chart");
    if (!fillin_->origin_in_chart()) throw PreconditionError("fill-in must be regular at its centre");
    areal_radius_ = areal(*exterior_, interface_radius_);
    // Smallest fill-in radius with the same boundary area.
    const double target = areal_radius_;
    double lo = 1e-9 * target;
    double hi = lo;
    for (int i = 0; i < 2000 && areal(*fillin_, hi) < target; ++i) {
        lo = hi;
        hi *= 1.05;
        if (hi > 1e9 * target) break;
    }
    if (areal(*fillin_, hi) < target)
        throw PreconditionError("fill-in contains no coordinate sphere of the interface area");
    fillin_radius_ = numerics::find_root([&](double r) { return areal(*fillin_, r) - target; }, lo, hi);
    interior_ = std::make_shared<ScaledMetric>(fillin_, fillin_radius_ / interface_radius_);
}

std::string GluedMetric::describe() const {
    std::ostringstream os;
    os << "glued(" << exterior_->describe() << " | " << fillin_->describe() << ", r0=" << interface_radius_ << ")";
    return os.str();
}

MetricJet GluedMetric::jet(const Vec3& x, Side side) const {
    const double r = x.norm();
    if (r > interface_radius_) return exterior_->jet(x, side);
    if (r < interface_radius_) return interior_->jet(x, side);
    return side_metric(side)->jet(x, side);
}

bool GluedMetric::analytic_second_derivatives() const {
    return exterior_->analytic_second_derivatives() && fillin_->analytic_second_derivatives();
}

void GluedMetric::check_point(const Vec3& x) const {
    if (!x.allFinite()) throw DomainError("non-finite evaluation point");
}

RadialJets GluedMetric::radial_jets(double r, Side side) const {
    if (r > interface_radius_) return exterior_->radial_jets(r);
    if (r < interface_radius_) return interior_->radial_jets(r);
    return side_metric(side)->radial_jets(r);
}

double GluedMetric::collar_t(double r, Side side) const {
    const Metric& m = side_metric(side);
    auto speed = [&](double s) { return std::sqrt(m->radial_jets(s).A.v); };
    const double dist = numerics::integrate_adaptive(speed, std::min(r, interface_radius_),
                                                     std::max(r, interface_radius_), 1e-14);
    return r >= interface_radius_ ? dist : -dist;
}

double GluedMetric::collar_limit(Side side) const {
    if (side == Side::interior) return collar_t(0.0, Side::interior);
    return std::numeric_limits<double>::infinity();
}

double GluedMetric::chart_radius(double t) const {
    const Side side = t >= 0.0 ? Side::exterior : Side::interior;
    if (t == 0.0) return interface_radius_;
    const Metric& m = side_metric(side);
    double r = interface_radius_ + t / std::sqrt(m->radial_jets(interface_radius_).A.v);
    if (side == Side::interior) r = std::max(r, 1e-3 * interface_radius_);
    for (int it = 0; it < 100; ++it) {
        const double f = collar_t(r, side) - t;
        const double step = f / std::sqrt(m->radial_jets(r).A.v);
        double next = r - step;
        if (side == Side::interior) next = std::clamp(next, 0.0, interface_radius_);
        else next = std::max(next, interface_radius_);
        if (std::abs(next - r) <= 1e-15 * std::max(1.0, r)) {
            r = next;
            break;
        }
        r = next;
    }
    return r;
}

Jet GluedMetric::warp(double t, Side side) const {
    return warp_at_radius(t == 0.0 ? interface_radius_ : chart_radius(t), side);
}

Jet GluedMetric::warp_at_radius(double r, Side side) const {
    const RadialJets ab = side_metric(side)->radial_jets(r);
    const double sb = std::sqrt(ab.B.v);
    const double R = r * sb;
    const double Rr = sb + r * ab.B.d1 / (2.0 * sb);
    const double Rrr = ab.B.d1 / sb + r * ab.B.d2 / (2.0 * sb) - r * ab.B.d1 * ab.B.d1 / (4.0 * ab.B.v * sb);
    const double A = ab.A.v;
    return {R, Rr / std::sqrt(A), Rrr / A - Rr * ab.A.d1 / (2.0 * A * A)};
}

Jet GluedMetric::warp(double t) const { return warp(t, t >= 0.0 ? Side::exterior : Side::interior); }

double default_fd_step(const Vec3& x) { return std::max(1e-4, 1e-4 * x.norm()); }

MetricJet finite_difference_jet(const MetricModel& metric, const Vec3& x, Side side, double h) {
    auto g = [&](const Vec3& p) { return metric.jet(p, side).g; };
    MetricJet out;
    out.g = g(x);
    std::array<Mat3, 3> plus, minus;
    for (int k = 0; k < 3; ++k) {
        const Vec3 e = h * Vec3::Unit(k);
        plus[k] = g(x + e);
        minus[k] = g(x - e);
        out.dg[k] = (plus[k] - minus[k]) / (2.0 * h);
        out.ddg[k][k] = (plus[k] - 2.0 * out.g + minus[k]) / (h * h);
    }
    for (int k = 0; k < 3; ++k)
        for (int l = k + 1; l < 3; ++l) {
            const Vec3 ek = h * Vec3::Unit(k), el = h * Vec3::Unit(l);
            const Mat3 v = (g(x + ek + el) - g(x + ek - el) - g(x - ek + el) + g(x - ek - el)) / (4.0 * h * h);
            out.ddg[k][l] = v;
            out.ddg[l][k] = v;
        }
    return out;
}

GeometrySample geometry_from_jet(const Vec3& x, const MetricJet& jet) {
    GeometrySample s;
    s.point = x;
    s.g = jet.g;
    s.g_inv = jet.g.inverse();
    s.dg = jet.dg;
    const Mat3& gi = s.g_inv;
    // Lowered symbols Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    auto lowered = [&](int l, int i, int j) { return 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j)); };
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = 0.0;
                for (int l = 0; l < 3; ++l) v += gi(k, l) * lowered(l, i, j);
                s.christoffel[k](i, j) = v;
            }
    // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    std::array<Mat3, 3> dginv;
    for (int m = 0; m < 3; ++m) dginv[m] = -gi * jet.dg[m] * gi;
    // dGamma[m][k](i, j) = d_m Gamma^k_ij
    std::array<std::array<Mat3, 3>, 3> dGamma;
    for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double v = 0.0;
                    for (int l = 0; l < 3; ++l) {
                        const double dl = 0.5 * (jet.ddg[m][i](j, l) + jet.ddg[m][j](i, l) - jet.ddg[m][l](i, j));
                        v += dginv[m](k, l) * lowered(l, i, j) + gi(k, l) * dl;
                    }
                    dGamma[m][k](i, j) = v;
                }
    const Tensor3& G = s.christoffel;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) {
                v += dGamma[k][k](i, j) - dGamma[j][k](i, k);
                for (int l = 0; l < 3; ++l) v += G[k](k, l) * G[l](i, j) - G[k](j, l) * G[l](i, k);
            }
            s.ricci(i, j) = v;
        }
    s.ricci = 0.5 * (s.ricci + s.ricci.transpose()).eval();
    s.scalar_curvature = (gi.cwiseProduct(s.ricci)).sum();
    return s;
}

GeometrySample geometry_at(const MetricModel& metric, const Vec3& x, Side side, DerivativeMode mode, double fd_step) {
    metric.check_point(x);
    const MetricModel* m = &metric;
    if (const GluedMetric* glued = metric.as_glued()) {
        const double r = x.norm();
        const Side s = r > glued->interface_radius() ? Side::exterior
                       : r < glued->interface_radius() ? Side::interior
                                                       : side;
        m = glued->side_metric(s).get();
    }
    const double h = fd_step > 0.0 ? fd_step : default_fd_step(x);
    MetricJet jet;
    if (mode == DerivativeMode::finite_difference) {
        jet = finite_difference_jet(*m, x, side, h);
    } else {
        jet = m->jet(x, side);
        if (!m->analytic_second_derivatives()) jet.ddg = finite_difference_jet(*m, x, side, h).ddg;
    }
    return geometry_from_jet(x, jet);
}

double scalar_curvature(const MetricModel& metric, const Vec3& x, Side side) {
    return geometry_at(metric, x, side).scalar_curvature;
}

JetFn schwarzschild_factor(double mass) {
    return [mass](double r) {
        return Jet{1.0 + mass / (2.0 * r), -mass / (2.0 * r * r), mass / (r * r * r)};
    };
}

JetFn bump_factor(double mass, double amplitude, double center, double width) {
    return [=](double r) {
        const double u = (r - center) / width;
        const double e = amplitude * std::exp(-u * u);
        return Jet{1.0 + mass / (2.0 * r) + e, -mass / (2.0 * r * r) - 2.0 * u / width * e,
                   mass / (r * r * r) + (4.0 * u * u - 2.0) / (width * width) * e};
    };
}

JetFn power_factor(double coefficient, double exponent) {
    return [=](double r) {
        const double t = coefficient * std::pow(r, -exponent);
        return Jet{1.0 + t, -exponent * t / r, exponent * (exponent + 1.0) * t / (r * r)};
    };
}

JetFn power_coefficient(double coefficient, double exponent) { return power_factor(coefficient, exponent); }

Metric make_flat() {
    return std::make_shared<ConformallyFlatMetric>(
        MetricKind::flat, [](double) { return Jet{1.0, 0.0, 0.0}; }, "flat", 1.0, 0.0, true, true);
}

Metric make_schwarzschild(double mass) {
    if (!std::isfinite(mass)) throw ArgumentError("Schwarzschild mass must be finite");
    std::ostringstream os;
    os << "schwarzschild(m=" << mass << ")";
    const double excluded = mass > 0.0 ? mass / 2.0 : 0.0;
    return std::make_shared<ConformallyFlatMetric>(MetricKind::schwarzschild, schwarzschild_factor(mass), os.str(),
                                                   1.0, excluded, mass == 0.0, true);
}

Metric make_conformally_flat(JetFn phi, std::string label, double decay_rate, double excluded_radius,
                             bool origin_in_chart) {
    return std::make_shared<ConformallyFlatMetric>(MetricKind::conformally_flat, std::move(phi), std::move(label),
                                                   decay_rate, excluded_radius, origin_in_chart, true);
}

Metric make_spherically_symmetric(JetFn A, JetFn B, std::string label, double decay_rate, double excluded_radius,
                                  bool origin_in_chart) {
    return std::make_shared<SphericallySymmetricMetric>(std::move(A), std::move(B), std::move(label), decay_rate,
                                                        excluded_radius, origin_in_chart);
}

Metric make_sphere_cap(double radius) {
    if (!(radius > 0.0)) throw ArgumentError("sphere radius must be positive");
    const double a2 = radius * radius;
    const double c = std::sqrt(2.0) * radius;
    JetFn phi = [a2, c](double r) {
        const double q = a2 + r * r;
        const double q12 = std::sqrt(q);
        const double q32 = q * q12;
        return Jet{c / q12, -c * r / q32, -c / q32 + 3.0 * c * r * r / (q32 * q)};
    };
    std::ostringstream os;
    os << "sphere-cap(a=" << radius << ")";
    return std::make_shared<ConformallyFlatMetric>(MetricKind::conformally_flat, std::move(phi), os.str(), 0.0, 0.0,
                                                   true, false);
}

std::shared_ptr<const GluedMetric> make_glued(Metric exterior, Metric fillin, double interface_radius) {
    return std::make_shared<GluedMetric>(std::move(exterior), std::move(fillin), interface_radius);
}

Metric make_conformal_deformation(Metric base, std::shared_ptr<const ScalarField> factor, std::string label) {
    return std::make_shared<ConformalDeformation>(std::move(base), std::move(factor), std::move(label));
}

}  // namespace mass_lab
