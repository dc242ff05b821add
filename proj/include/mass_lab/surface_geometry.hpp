#pragma once

#include "mass_lab/metric_models.hpp"
#include "mass_lab/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mass_lab {

// Parametrization X(theta, phi) with first and second parameter derivatives.
struct SurfacePoint {
    Vec3 x = Vec3::Zero();
    Vec3 xt = Vec3::Zero(), xp = Vec3::Zero();
    Vec3 xtt = Vec3::Zero(), xtp = Vec3::Zero(), xpp = Vec3::Zero();
};

enum class SurfaceKind { coordinate_sphere, revolution, scaled };

// Profile (rho(theta), z(theta)) of a surface of revolution about the z axis.
struct RevolutionProfile {
    JetFn rho;
    JetFn z;
};

// Closed surface parametrized over [0, pi] x [0, 2 pi). Orientation: the
// normal along X_theta x X_phi points away from the enclosed region.
class SurfaceModel {
public:
    static SurfaceModel coordinate_sphere(double radius, int polar_axis = 2);
    static SurfaceModel revolution(RevolutionProfile profile, std::string label);
    // r(theta) along rays from the origin.
    static SurfaceModel radial_graph(JetFn radius, std::string label);
    // (a sin theta cos phi, a sin theta sin phi, c cos theta)
    static SurfaceModel ellipsoid(double a, double c);
    // Radial graph 1 - (1 - neck) sin^2 theta, pinched at the equator.
    static SurfaceModel dumbbell(double neck);
    // Two-column text file (theta, r(theta)) interpolated by a clamped spline.
    static SurfaceModel from_profile_file(const std::string& path);
    static SurfaceModel scaled(const SurfaceModel& base, double factor);
    // Coordinates divided by the divisor (bitwise X / d).
    static SurfaceModel divided(const SurfaceModel& base, double divisor);

    [[nodiscard]] SurfaceKind kind() const { return kind_; }
    [[nodiscard]] const std::string& describe() const { return label_; }
    [[nodiscard]] SurfacePoint eval(double theta, double phi) const { return eval_(theta, phi); }

    [[nodiscard]] bool is_coordinate_sphere() const { return sphere_radius_.has_value(); }
    [[nodiscard]] double sphere_radius() const;
    [[nodiscard]] int polar_axis() const { return polar_axis_; }
    // Same sphere with its parameter poles on another coordinate axis.
    [[nodiscard]] SurfaceModel with_polar_axis(int axis) const;
    // Revolution symmetric about the z axis (the parametrization's polar axis).
    [[nodiscard]] bool revolution_symmetric() const { return polar_axis_ == 2; }

private:
    SurfaceKind kind_ = SurfaceKind::coordinate_sphere;
    std::string label_;
    std::function<SurfacePoint(double, double)> eval_;
    std::optional<double> sphere_radius_;
    int polar_axis_ = 2;
};

// Surfaces Sigma_r indexed by a scale r.
struct SurfaceFamily {
    std::function<SurfaceModel(double)> at;
    std::string label;

    static SurfaceFamily coordinate_spheres();
    // Sigma_r = r * base
    static SurfaceFamily scaled(SurfaceModel base);
};

// (1/r) Sigma_r
SurfaceModel rescale_surface(const SurfaceFamily& family, double r);

struct FundamentalForms {
    Vec3 point = Vec3::Zero();
    Mat2 first = Mat2::Identity();
    Mat2 first_inv = Mat2::Identity();
    Mat2 second = Mat2::Zero();
    double H = 0.0;
    double K = 0.0;  // intrinsic, from the Gauss equation
    double kappa1 = 0.0, kappa2 = 0.0;  // kappa1 <= kappa2
    Vec3 normal = Vec3::Zero();        // unit normal vector mu^i
    Vec3 normal_covector = Vec3::Zero();  // g_ij mu^j
    double area_element = 0.0;         // sqrt(det first)
    SurfacePoint param;
};

// Pole parameters are moved inward by this offset.
inline constexpr double pole_offset = 1e-6;
double regular_theta(double theta);

// Forms of the surface in the ambient metric. On a glued metric the side
// selects which one-sided ambient data is used.
FundamentalForms fundamental_forms(const SurfaceModel& surface, const MetricModel& metric, double theta,
                                   double phi, Side side = Side::exterior);

// Metric actually used on one side of a glued model (the model itself otherwise).
const MetricModel& side_ambient(const MetricModel& metric, Side side);

struct PrincipalBounds {
    double min_kappa = 0.0;
    double max_kappa = 0.0;
    bool satisfies = false;
};

// Sweeps an (n+1) x n parameter grid of the rescaled surface in flat space and
// checks k1 < kappa < k2.
PrincipalBounds principal_bounds(const SurfaceFamily& family, double r, double k1, double k2, int n = 256);

// Quadrature on the parameter domain: Gauss-Legendre in theta, uniform in phi.
struct ParameterNode {
    double theta, phi, weight;  // weight for dtheta dphi
};
std::vector<ParameterNode> surface_rule(int n_theta, int n_phi);

// Area and (1/2 pi) * integral of K dA.
struct SurfaceTotals {
    double area = 0.0;
    double gauss_bonnet = 0.0;
    double min_K = 0.0;
};
SurfaceTotals surface_totals(const SurfaceModel& surface, const MetricModel& metric, int n_theta = 64,
                             int n_phi = 128, Side side = Side::exterior);

// Triangulated 2-complex.
struct LevelSetMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
};

struct MeshCounts {
    long vertices = 0, edges = 0, faces = 0, boundary_loops = 0;
};

// Counts cells; throws MeshError when an edge bounds more than two faces.
MeshCounts mesh_counts(const LevelSetMesh& mesh);
long euler_characteristic(const LevelSetMesh& mesh);

LevelSetMesh icosphere_mesh(int subdivisions);
LevelSetMesh torus_mesh(double major, double minor, int n_major, int n_minor);
// Planar annulus with two boundary loops.
LevelSetMesh annulus_mesh(double inner, double outer, int n_radial, int n_angular);
// Closed triangulation of a parametrized surface with pole vertices.
LevelSetMesh surface_mesh(const SurfaceModel& surface, int n_theta, int n_phi);

// Vertex samples on a box grid with n cells per axis, x fastest.
struct ScalarGrid {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    int n = 0;
    std::vector<double> values;
    [[nodiscard]] std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i + (n + 1) * (j + (n + 1) * k));
    }
    [[nodiscard]] Vec3 point(int i, int j, int k) const;
};

ScalarGrid sample_grid(const std::function<double(const Vec3&)>& f, const Vec3& lo, const Vec3& hi, int n);

// Marching-tetrahedra extraction of {u = level} restricted to {region >= 0}.
// Vertices are keyed by grid edges, so the result is a consistent complex.
// Grid values equal to the level count as above it.
LevelSetMesh extract_level_set(const ScalarGrid& u, const ScalarGrid* region, double level);

}  // namespace mass_lab
