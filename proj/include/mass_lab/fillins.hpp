#pragma once

#include "mass_lab/harmonic_solver.hpp"
#include "mass_lab/metric_models.hpp"
#include "mass_lab/surface_geometry.hpp"
#include "mass_lab/weyl_embedding.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mass_lab {

enum class FillinKind { euclidean, conformal, custom };

std::string to_string(FillinKind kind);

// A compact region whose boundary is isometric to a host surface.
struct FillinModel {
    FillinKind kind = FillinKind::custom;
    std::string label;
    Metric metric;             // metric of the fill-in chart
    SurfaceModel boundary;     // boundary surface in that chart
    std::optional<double> ball_radius;  // Euclidean balls
    std::optional<HarmonicField> green; // conformal fill-ins
    double isometry_residual = 0.0;     // sup of first fundamental form differences
};

// Mean curvatures on the host surface along the theta nodes (phi = 0).
struct CornerJump {
    std::vector<double> theta;
    std::vector<double> H;          // host side, normal towards infinity
    std::vector<double> H_fillin;   // fill-in side, outward normal of the fill-in
    std::vector<double> jump;       // H_fillin - H
    double max_abs_jump = 0.0;
    double isometry_residual = 0.0;
};

// Flat region bounded by the isometric image of sigma.
std::pair<FillinModel, CornerJump> euclidean_fillin(const SurfaceModel& sigma, const Metric& metric,
                                                    int n_theta = 48);

// Interior of a glued model seen as a fill-in of its interface sphere.
std::pair<FillinModel, CornerJump> glued_fillin(const std::shared_ptr<const GluedMetric>& glued, int n_theta = 48);

struct ConformalFillin {
    FillinModel model;
    double dG_dmu = 0.0;
    std::vector<double> theta;
    std::vector<double> H;           // host mean curvature
    std::vector<double> H_formula;   // -H - 4 dG/dmu
    std::vector<double> H_direct;    // from the second fundamental form of G^4 g
    double max_difference = 0.0;
};

// g* = G^4 g on the exterior of a coordinate sphere, compactified at infinity.
ConformalFillin conformal_fillin(const Metric& metric, const SurfaceModel& sigma, const SolverOptions& options = {},
                                 int n_theta = 24);

// Fill-in sphere cap whose interface mean curvature equals that of the
// exterior coordinate sphere of radius r0 (requires 0 < dR/dt < 1 there).
Metric matched_cap(const Metric& exterior, double r0);

// Standard bump exp(-1 / (1 - s^2)) on (-1, 1) with unit integral.
double mollifier(double s);

// Glued model with its warping function W(t) smoothed across the interface.
// Inside |t| < delta^2 W is replaced by its mollification at scale delta^2;
// for delta^2 < |t| < delta the two are blended; outside the model is unchanged.
class MollifiedMetric final : public MetricModel {
public:
    MollifiedMetric(std::shared_ptr<const GluedMetric> glued, double delta);

    [[nodiscard]] MetricKind kind() const override { return MetricKind::spherically_symmetric; }
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] double decay_rate() const override { return glued_->decay_rate(); }
    [[nodiscard]] MetricJet jet(const Vec3& x, Side side = Side::exterior) const override;
    [[nodiscard]] bool analytic_second_derivatives() const override { return true; }
    void check_point(const Vec3& x) const override { glued_->check_point(x); }
    [[nodiscard]] double asymptotic_radius() const override { return outer_radius_; }
    [[nodiscard]] bool is_radial() const override { return true; }
    [[nodiscard]] RadialJets radial_jets(double r, Side side = Side::exterior) const override;

    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] double core() const { return delta_ * delta_; }
    [[nodiscard]] const GluedMetric& glued() const { return *glued_; }
    [[nodiscard]] const std::shared_ptr<const GluedMetric>& glued_ptr() const { return glued_; }

    // Unsmoothed and smoothed warping functions at collar distance t.
    [[nodiscard]] Jet raw_warp(double t) const;
    [[nodiscard]] Jet warp(double t) const;
    // Scalar curvature 2 (1 - W'^2) / W^2 - 4 W'' / W of dt^2 + W^2 dOmega^2.
    [[nodiscard]] double collar_curvature(double t) const;
    // Chart radius of the sphere at collar distance t (|t| <= delta).
    [[nodiscard]] double collar_radius(double t) const;
    [[nodiscard]] double collar_distance(double r) const;

private:
    struct Table {
        std::vector<double> r, t;   // both increasing
        std::vector<double> A, dA;  // radial coefficient and d/dr
    };
    [[nodiscard]] static std::size_t locate(const std::vector<double>& nodes, double x);
    [[nodiscard]] static double t_of_r(const Table& tab, double r);
    [[nodiscard]] static double r_of_t(const Table& tab, double t);
    [[nodiscard]] const Table& table(double t) const { return t >= 0.0 ? outer_ : inner_; }

    std::shared_ptr<const GluedMetric> glued_;
    double delta_;
    double outer_radius_ = 0.0, inner_radius_ = 0.0;  // chart radii of t = +delta, -delta
    Table inner_, outer_;
};

std::shared_ptr<const MollifiedMetric> mollify(std::shared_ptr<const GluedMetric> glued, double delta);

struct CollarOptions {
    bool resolve = false;  // also evaluate with the harmonic function of each smoothed metric
    int n_angle = 24;
    double rel_tol = 1e-9;
};

struct CollarResult {
    std::vector<double> delta;
    std::vector<double> integral;   // integral of R_delta |grad u| over the collar
    std::vector<double> resolved;   // same with u re-solved on g_delta (when requested)
    std::vector<double> extrapolant;  // Richardson estimates (first entry copies the value)
    double expected = 0.0;          // 2 * integral of (H_fillin - H) |grad u| over the interface
    std::optional<double> limit;
    bool monotone = true;
};

CollarResult collar_integral(const std::shared_ptr<const GluedMetric>& glued, const HarmonicField& field,
                             const std::vector<double>& deltas, const CollarOptions& options = {});

}  // namespace mass_lab
