#pragma once

#include "mass_lab/metric_models.hpp"
#include "mass_lab/surface_geometry.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mass_lab {

enum class Representation { separated, grid3d };

std::string to_string(Representation r);

struct SolverOptions {
    Representation representation = Representation::separated;
    double tolerance = 1e-8;
    double r_max_factor = 10.0;  // far boundary of radial meshes, in units of r0
    double log_step = 0.005;    // radial mesh spacing in ln r
    // Optional band of radii [refine_lo, refine_hi] meshed with spacing refine_step in ln r.
    double refine_lo = 0.0, refine_hi = 0.0, refine_step = 0.0;
    double start_fraction = 1e-5;  // regular interior solutions start at this fraction of r0
    // |grad u|_eps = sqrt(|grad u|^2 + eps); negative selects the representation default
    double epsilon = -1.0;
    // grid3d, lengths in units of r0
    double grid_half_width = 4.0;
    double grid_spacing = 0.05;
    double cg_tolerance = 1e-10;
    int cg_max_iterations = 20000;
    bool parallel = true;
};

// Radial function on a mesh with quintic Hermite interpolation of (f, f', f'')
// and an optional closed-form tail beyond the last node. When the profile
// solves a second-order equation, f'' can be taken from the equation instead:
// the interpolated f'' loses about eps |f| / h^2 to cancellation.
class RadialProfile {
public:
    using SecondDerivative = std::function<double(double r, double f, double df)>;

    RadialProfile() = default;
    RadialProfile(std::vector<double> r, std::vector<Jet> samples, JetFn tail = {}, SecondDerivative second = {});
    // Same mesh, tail and equation with new samples.
    [[nodiscard]] RadialProfile with_samples(std::vector<Jet> samples) const;

    [[nodiscard]] Jet eval(double r) const;
    [[nodiscard]] double front() const { return r_.front(); }
    [[nodiscard]] double back() const { return r_.back(); }
    [[nodiscard]] const std::vector<double>& nodes() const { return r_; }
    [[nodiscard]] const std::vector<Jet>& samples() const { return f_; }
    [[nodiscard]] bool empty() const { return r_.empty(); }

private:
    std::vector<double> r_;
    std::vector<Jet> f_;
    JetFn tail_;
    SecondDerivative second_;
};

// u = f(r) Y with Y = x_1 / r (degree 1) or Y = 1 (degree 0).
struct RadialMode {
    int degree = 1;
    RadialProfile exterior;   // r >= r0
    RadialProfile interior;   // r < r0, glued chart (empty without a fill-in side)
    double inner_radius = 0.0;  // r0; 0 when the field has no inner boundary
    bool has_boundary = false;  // exterior region ends at r0
    double interior_slope = 0.0;  // a: u ~ a x_1 near the centre of the fill-in chart
    double dipole = 0.0;          // b: coefficient of the decaying basis
    double growth = 1.0;          // coefficient of the growing basis
    double epsilon = 0.0;
};

// Traces on the interface sphere; every quantity is the coefficient of x_1/r.
struct TransmissionData {
    double interface_radius = 0.0;
    double trace_exterior = 0.0, trace_interior = 0.0;
    double flux_exterior = 0.0, flux_interior = 0.0;  // du/dmu
    double normal_second_exterior = 0.0, normal_second_interior = 0.0;  // d^2u/dt^2
};

struct FieldSample {
    double u = 0.0;
    Vec3 grad = Vec3::Zero();  // coordinate partials d_i u
    Mat3 hess = Mat3::Zero();  // d_i d_j u
};

// Geometric quantities of a field at a point.
struct FieldGeometry {
    FieldSample sample;
    GeometrySample geometry;
    Vec3 grad_vector = Vec3::Zero();   // g^ij d_j u
    double grad_norm = 0.0;            // |grad u|
    Mat3 hess = Mat3::Zero();          // covariant Hessian
    double hess_norm_sq = 0.0;         // |Hess u|^2
    double grad_of_grad_norm_sq = 0.0; // |grad |grad u||^2
};

class GridField;

// A harmonic function with pointwise evaluators. Immutable; copies share state.
class HarmonicField {
public:
    class Impl;

    HarmonicField() = default;
    explicit HarmonicField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    [[nodiscard]] Representation representation() const;
    [[nodiscard]] const Metric& metric() const;
    [[nodiscard]] std::string describe() const;
    [[nodiscard]] double epsilon() const;

    // Side is chosen by |x| relative to the interface unless given.
    [[nodiscard]] FieldSample sample(const Vec3& x) const;
    [[nodiscard]] FieldSample sample(const Vec3& x, Side side) const;
    [[nodiscard]] double value(const Vec3& x) const { return sample(x).u; }
    [[nodiscard]] Side side_of(const Vec3& x) const;

    // Inner boundary radius of the exterior region (0 without boundary).
    [[nodiscard]] double inner_radius() const;
    [[nodiscard]] bool has_boundary() const;
    // True for transmission solves on glued metrics.
    [[nodiscard]] bool has_fillin() const;
    [[nodiscard]] std::optional<TransmissionData> transmission() const;

    [[nodiscard]] const RadialMode* separated() const;
    [[nodiscard]] const GridField* grid() const;
    // Solver tolerance the field was computed with.
    [[nodiscard]] double tolerance() const;

private:
    std::shared_ptr<const Impl> impl_;
};

FieldGeometry field_geometry(const HarmonicField& field, const Vec3& x, Side side);
FieldGeometry field_geometry(const HarmonicField& field, const Vec3& x);

// Laplace-Beltrami residual with second derivatives taken by central
// differences of the gradient evaluator.
double laplace_residual(const HarmonicField& field, const Vec3& x, double h = 1e-4);

enum class InnerKind { none, dirichlet, neumann, transmission };

struct InnerCondition {
    InnerKind kind = InnerKind::none;
    double value = 0.0;  // Dirichlet data: u = value * x_1 / r0 on the sphere
    double radius = 0.0;  // r0 for dirichlet / neumann
    static InnerCondition none() { return {}; }
    static InnerCondition dirichlet(double radius, double value = 0.0) {
        return {InnerKind::dirichlet, value, radius};
    }
    static InnerCondition neumann(double radius) { return {InnerKind::neumann, 0.0, radius}; }
    static InnerCondition transmission() { return {InnerKind::transmission, 0.0, 0.0}; }
};

// Harmonic u asymptotic to x_1.
HarmonicField solve_asymptotic(const Metric& metric, const InnerCondition& inner, const SolverOptions& options = {});

// G = 1 on the coordinate sphere, G -> 0 at infinity.
HarmonicField solve_green(const Metric& metric, const SurfaceModel& sigma, const SolverOptions& options = {});

// dG/dmu on a coordinate sphere (constant for radial models).
double green_normal_derivative(const HarmonicField& green);

struct RobinSolution {
    HarmonicField v;
    HarmonicField u;        // v + w
    double coefficient = 0.0;  // d in v = d * (decaying basis) * x_1 / r
    double robin_residual = 0.0;
    double dw_dmu = 0.0;    // coefficients of x_1 / r on the sphere
    double dv_dmu = 0.0;
    double dG_dmu = 0.0;
};

// v harmonic, v -> 0, with v dG/dmu - 2 dv/dmu = dw/dmu on the sphere.
RobinSolution solve_robin_v(const Metric& metric, const HarmonicField& green, const HarmonicField& w,
                            const SolverOptions& options = {});

// Deterministic uniform sample points (xoshiro-style generator).
class SampleStream {
public:
    explicit SampleStream(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {}
    double uniform();  // [0, 1)
    Vec3 direction();

private:
    std::uint64_t next();
    std::uint64_t state_;
};

struct FieldSamplePoint {
    Vec3 x;
    Side side;
};

// Points in the field's domain: exterior radii up to outer_factor * r0,
// fill-in points when present.
std::vector<FieldSamplePoint> random_field_points(const HarmonicField& field, std::size_t count, std::uint64_t seed,
                                                  double outer_factor = 20.0);

struct KatoReport {
    double min_slack = 0.0;
    double min_relative_slack = 0.0;  // slack / |Hess u|^2 where |Hess u| > 1e-6 |grad u| / max(1, |x|)
    std::vector<Vec3> equality_points;  // slack < 1e-8
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  // |grad u| below tolerance
};

// Slack |Hess u|^2 - (3/2) |grad |grad u||^2.
KatoReport kato_check(const HarmonicField& field, const std::vector<FieldSamplePoint>& samples,
                      double skip_below = 1e-10);

struct CornerProbe {
    std::vector<double> h;
    std::vector<double> quotient_max;    // sup |second tangential difference quotient|
    std::vector<double> cauchy;          // sup |Q(h_k) - Q(h_{k+1})|
    double max_cauchy = 0.0;
    double trace_mismatch = 0.0;         // sup |u_+ - u_-| on the sphere
    double flux_mismatch = 0.0;
    double normal_jump_residual = 0.0;   // sup |jump - (H - H_Omega) du/dt|
    double max_normal_jump = 0.0;
    double H_exterior = 0.0, H_interior = 0.0;
};

CornerProbe corner_regularity_probe(const HarmonicField& field, const TransmissionData& interface,
                                    const std::vector<double>& h_sequence, int n_nodes = 24);

struct FoliationProfile {
    std::vector<double> s;
    std::vector<double> f;        // |grad u|
    std::vector<double> f_ss;     // second differences, interior samples only
    std::vector<double> K_level;  // Gauss curvature of the level set
    std::vector<double> K_sigma;  // K_level / f
    std::vector<double> residual; // f_ss - 2 K_sigma
    double max_residual = 0.0;
    bool truncated = false;
};

// Follows dx/ds = grad u / |grad u|^2 from start for n steps of size ds.
FoliationProfile foliation_profile_check(const HarmonicField& field, const Vec3& start, double ds, int steps);

// Cell-centred octant grid of a grid3d solve.
class GridField {
public:
    struct Data {
        std::size_t n = 0;      // cells per axis of the octant box
        double h = 0.0;
        double half_width = 0.0;
        double inner_radius = 0.0;
        double boundary_value = 0.0;
        double far_dipole = 0.0;
        std::vector<double> values;
        std::vector<std::uint8_t> active;
        double residual = 0.0;
        int iterations = 0;
        Metric metric;
    };
    explicit GridField(Data data) : d_(std::move(data)) {}

    [[nodiscard]] FieldSample sample(const Vec3& x) const;
    [[nodiscard]] const Data& data() const { return d_; }
    // Points at which every stencil value is available.
    [[nodiscard]] bool evaluable(const Vec3& x) const;

private:
    [[nodiscard]] double node(long i, long j, long k) const;
    [[nodiscard]] bool node_known(long i, long j, long k) const;
    Data d_;
};

}  // namespace mass_lab
