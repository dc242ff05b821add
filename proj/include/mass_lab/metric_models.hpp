#pragma once

#include "mass_lab/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace mass_lab {

enum class MetricKind {
    flat,
    schwarzschild,
    conformally_flat,
    spherically_symmetric,
    glued,
    conformal_deformation,
};

std::string to_string(MetricKind kind);

// Metric components and their coordinate derivatives at a point:
// dg[k](i, j) = d_k g_ij and ddg[k][l](i, j) = d_k d_l g_ij.
struct MetricJet {
    Mat3 g = Mat3::Identity();
    Tensor3 dg = zero_tensor3();
    Tensor4 ddg = zero_tensor4();
};

// A smooth real function on the chart with exact first and second derivatives.
class ScalarField {
public:
    virtual ~ScalarField() = default;
    [[nodiscard]] virtual double value(const Vec3& x) const = 0;
    [[nodiscard]] virtual Vec3 gradient(const Vec3& x) const = 0;
    [[nodiscard]] virtual Mat3 hessian(const Vec3& x) const = 0;
};

// phi(|x|) from a radial jet.
class RadialScalarField final : public ScalarField {
public:
    explicit RadialScalarField(JetFn profile) : profile_(std::move(profile)) {}
    [[nodiscard]] double value(const Vec3& x) const override;
    [[nodiscard]] Vec3 gradient(const Vec3& x) const override;
    [[nodiscard]] Mat3 hessian(const Vec3& x) const override;
    [[nodiscard]] Jet radial(double r) const { return profile_(r); }

private:
    JetFn profile_;
};

// g = A(r) dr^2 + B(r) r^2 dOmega^2, with derivative jets of A and B.
struct RadialJets {
    Jet A;
    Jet B;
};

class GluedMetric;

class MetricModel {
public:
    virtual ~MetricModel() = default;

    [[nodiscard]] virtual MetricKind kind() const = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
    // Declared asymptotic decay order of g - delta.
    [[nodiscard]] virtual double decay_rate() const = 0;

    // Components and derivatives at x. The side only matters on the
    // interface of a glued model.
    [[nodiscard]] virtual MetricJet jet(const Vec3& x, Side side = Side::exterior) const = 0;
    [[nodiscard]] virtual bool analytic_second_derivatives() const { return true; }

    // Throws DomainError when x lies outside the chart.
    virtual void check_point(const Vec3& x) const;
    // Points with |x| <= this radius are outside the chart.
    [[nodiscard]] virtual double excluded_radius() const { return 0.0; }
    [[nodiscard]] virtual bool origin_in_chart() const { return true; }
    // Coordinate spheres beyond this radius lie in the asymptotic end.
    [[nodiscard]] virtual double asymptotic_radius() const { return excluded_radius(); }
    [[nodiscard]] virtual bool asymptotically_flat() const { return true; }

    [[nodiscard]] virtual bool is_radial() const { return false; }
    [[nodiscard]] virtual RadialJets radial_jets(double r, Side side = Side::exterior) const;

    [[nodiscard]] virtual const ScalarField* conformal_factor() const { return nullptr; }
    [[nodiscard]] virtual const GluedMetric* as_glued() const { return nullptr; }
};

using Metric = std::shared_ptr<const MetricModel>;

// Pullback of a metric under y -> scale * y: components scale * scale * g(scale * y).
class ScaledMetric final : public MetricModel {
public:
    ScaledMetric(Metric base, double scale);
    [[nodiscard]] MetricKind kind() const override { return base_->kind(); }
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] double decay_rate() const override { return base_->decay_rate(); }
    [[nodiscard]] MetricJet jet(const Vec3& x, Side side = Side::exterior) const override;
    [[nodiscard]] bool analytic_second_derivatives() const override { return base_->analytic_second_derivatives(); }
    void check_point(const Vec3& x) const override { base_->check_point(scale_ * x); }
    [[nodiscard]] double excluded_radius() const override { return base_->excluded_radius() / scale_; }
    [[nodiscard]] bool origin_in_chart() const override { return base_->origin_in_chart(); }
    [[nodiscard]] bool asymptotically_flat() const override { return false; }
    [[nodiscard]] bool is_radial() const override { return base_->is_radial(); }
    [[nodiscard]] RadialJets radial_jets(double r, Side side = Side::exterior) const override;
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] const Metric& base() const { return base_; }

private:
    Metric base_;
    double scale_;
};

// Two spherically symmetric models joined along a coordinate sphere. One
// chart y: |y| >= r0 uses the exterior, |y| < r0 the fill-in pulled back by
// y -> s y, with s chosen so that the boundary spheres have equal area.
class GluedMetric final : public MetricModel {
public:
    GluedMetric(Metric exterior, Metric fillin, double interface_radius);

    [[nodiscard]] MetricKind kind() const override { return MetricKind::glued; }
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] double decay_rate() const override { return exterior_->decay_rate(); }
    [[nodiscard]] MetricJet jet(const Vec3& x, Side side = Side::exterior) const override;
    [[nodiscard]] bool analytic_second_derivatives() const override;
    void check_point(const Vec3& x) const override;
    [[nodiscard]] double excluded_radius() const override { return 0.0; }
    [[nodiscard]] bool origin_in_chart() const override { return true; }
    [[nodiscard]] double asymptotic_radius() const override { return interface_radius_; }
    [[nodiscard]] bool is_radial() const override { return true; }
    [[nodiscard]] RadialJets radial_jets(double r, Side side = Side::exterior) const override;
    [[nodiscard]] const GluedMetric* as_glued() const override { return this; }

    [[nodiscard]] const Metric& exterior() const { return exterior_; }
    [[nodiscard]] const Metric& fillin() const { return fillin_; }
    // The fill-in expressed in the glued chart.
    [[nodiscard]] const Metric& interior() const { return interior_; }
    [[nodiscard]] const Metric& side_metric(Side side) const { return side == Side::exterior ? exterior_ : interior_; }
    [[nodiscard]] double interface_radius() const { return interface_radius_; }
    [[nodiscard]] double fillin_radius() const { return fillin_radius_; }
    [[nodiscard]] double scale() const { return fillin_radius_ / interface_radius_; }
    [[nodiscard]] double areal_radius() const { return areal_radius_; }

    // Collar coordinates: t is signed proper distance from the interface
    // along radial geodesics, t > 0 on the exterior side.
    [[nodiscard]] double collar_t(double chart_radius, Side side) const;
    [[nodiscard]] double chart_radius(double t) const;
    [[nodiscard]] double collar_limit(Side side) const;
    // Areal radius R(t) of the sphere at collar distance t with two derivatives.
    [[nodiscard]] Jet warp(double t) const;
    [[nodiscard]] Jet warp(double t, Side side) const;
    // Same jet (t derivatives) at a chart radius.
    [[nodiscard]] Jet warp_at_radius(double r, Side side) const;

private:
    Metric exterior_;
    Metric fillin_;
    Metric interior_;
    double interface_radius_;
    double fillin_radius_;
    double areal_radius_;
};

struct GeometrySample {
    Vec3 point = Vec3::Zero();
    Mat3 g = Mat3::Identity();
    Mat3 g_inv = Mat3::Identity();
    Tensor3 dg = zero_tensor3();
    Tensor3 christoffel = zero_tensor3();  // christoffel[k](i, j) = Gamma^k_ij
    Mat3 ricci = Mat3::Zero();
    double scalar_curvature = 0.0;
};

enum class DerivativeMode { analytic, finite_difference };

// Default central-difference step, max(1e-4, 1e-4 |x|).
double default_fd_step(const Vec3& x);

// Metric derivatives by central differences of the components only.
MetricJet finite_difference_jet(const MetricModel& metric, const Vec3& x, Side side, double step);

GeometrySample geometry_from_jet(const Vec3& x, const MetricJet& jet);

// Christoffel symbols, Ricci tensor and scalar curvature at x. Models
// without analytic second derivatives fall back to differencing.
GeometrySample geometry_at(const MetricModel& metric, const Vec3& x, Side side = Side::exterior,
                           DerivativeMode mode = DerivativeMode::analytic, double fd_step = 0.0);

double scalar_curvature(const MetricModel& metric, const Vec3& x, Side side = Side::exterior);

// Cartesian jet of A dr^2 + B r^2 dOmega^2.
MetricJet radial_metric_jet(const Vec3& x, const RadialJets& ab);

// Factories.
Metric make_flat();
Metric make_schwarzschild(double mass);
// g = phi^4 delta with radial phi.
Metric make_conformally_flat(JetFn phi, std::string label, double decay_rate, double excluded_radius = 0.0,
                             bool origin_in_chart = true);
Metric make_spherically_symmetric(JetFn A, JetFn B, std::string label, double decay_rate,
                                  double excluded_radius = 0.0, bool origin_in_chart = true);
// Round three-sphere of the given radius in a stereographic chart.
Metric make_sphere_cap(double radius);
std::shared_ptr<const GluedMetric> make_glued(Metric exterior, Metric fillin, double interface_radius);
// G^4 g for a positive scalar field G.
Metric make_conformal_deformation(Metric base, std::shared_ptr<const ScalarField> factor, std::string label);

// Radial conformal factor profiles used by the catalog.
JetFn schwarzschild_factor(double mass);
// 1 + mass / (2r) + amplitude * exp(-((r - center) / width)^2)
JetFn bump_factor(double mass, double amplitude, double center, double width);
// 1 + coefficient * r^(-exponent)
JetFn power_factor(double coefficient, double exponent);
// 1 + coefficient * r^(-exponent) as a metric coefficient
JetFn power_coefficient(double coefficient, double exponent);

}  // namespace mass_lab
