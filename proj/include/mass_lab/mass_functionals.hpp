#pragma once

#include "mass_lab/asymptotics.hpp"
#include "mass_lab/harmonic_solver.hpp"
#include "mass_lab/surface_geometry.hpp"
#include "mass_lab/weyl_embedding.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mass_lab {

enum class Region { exterior, fillin, both };

std::string to_string(Region region);

struct BulkOptions {
    int n_radial = 64;
    int n_angle = 48;
    // Exterior region starts at this radius; 0 uses the field's boundary or interface.
    double inner_radius = 0.0;
    double guard = 1e-10;  // |grad u| below this is replaced by sqrt(|grad u|^2 + guard^2)
};

struct BulkResult {
    double value = 0.0;            // integral of |Hess u|^2 / |grad u| + R |grad u|
    double error_estimate = 0.0;   // |I(n) - I(n/2)|
    double unguarded = 0.0;
    bool divergent = false;        // guarded and unguarded differ by more than 1%
    double min_grad = 0.0;         // over quadrature nodes
    bool truncated = false;        // grid fields: only the evaluable part is covered
};

// Axisymmetric quadrature about the x_1 axis in (r, angle), exterior mapped by r0 / r.
BulkResult bulk_integral(const HarmonicField& field, Region region, const BulkOptions& options = {});

struct AngleTermSample {
    double theta = 0.0, phi = 0.0;
    Vec3 point = Vec3::Zero();
    double beta = 0.0;          // arcsin(du/dmu / |grad u|)
    double dbeta = 0.0;         // <grad_S beta, n> with n = grad_S u / |grad_S u|
    double weight = 0.0;        // |grad u|
    double curvature = 0.0;     // geodesic curvature of the level curve of u on S
    double integrand = 0.0;     // dbeta * weight
    double surface_form_integrand = 0.0;  // <grad_S psi, grad_S u>/|grad u| - psi/|grad u| Hess_S u(n, n)
    double area_weight = 0.0;
};

struct BoundaryOptions {
    int n_theta = 48;
    int n_phi = 48;
    double step = 1e-3;          // parameter step for differences of beta
    double exclude_below = 1e-10;  // |grad_S u| threshold
    bool keep_samples = true;
};

struct BoundaryTerms {
    double H_term = 0.0;      // -integral of H |grad u|
    double angle_term = 0.0;
    double area = 0.0;
    std::size_t excluded = 0;
    double excluded_measure = 0.0;
    double max_form_difference = 0.0;  // over samples with |grad_S u| > 1e-6
    std::vector<AngleTermSample> samples;
};

BoundaryTerms boundary_terms(const HarmonicField& field, const SurfaceModel& surface, Side side,
                             const BoundaryOptions& options = {});

struct DeficitOptions {
    int grid = 48;               // cells per axis of the extraction grid
    double surface_radius = 0.0;  // region is |x| >= this (0: whole chart)
    double box_factor = 1.5;     // box half-width relative to max(r0, T)
    double regular_threshold = 1e-6;
};

struct LevelSetDeficit {
    std::vector<double> t;        // sampled levels (interval midpoints)
    std::vector<double> lengths;  // interval lengths
    std::vector<long> chi;
    std::vector<bool> skipped;    // non-regular sample
    double deficit = 0.0;         // 2 pi sum (chi - 1) * length
    double T = 0.0;
    double box = 0.0;
};

// Level sets of u inside a coordinate cylinder about the x_1 axis, where
// plane-like sheets are capped to disks.
LevelSetDeficit level_set_deficit(const HarmonicField& field, const DeficitOptions& options = {});

// (1/8 pi) integral of (H0 - H) over the surface; throws PreconditionError
// when the Gauss curvature is not positive at some node.
double brown_york(const SurfaceModel& surface, const MetricModel& metric, const EmbeddingResult& embedding,
                  int n_theta = 96, Side side = Side::exterior);

// ADM mass by the conformal flux when available, otherwise by an extrapolated surface integral.
double reference_mass(const MetricModel& metric);

struct BoundaryInequalityReport {
    double mass = 0.0;
    double chi_deficit = 0.0;
    double bulk = 0.0;
    double bulk_error = 0.0;
    double H_term = 0.0;
    double angle_term = 0.0;
    double lhs = 0.0;  // 8 pi m + deficit
    double rhs = 0.0;  // bulk / 2 + H term + angle term
    double residual = 0.0;
    LevelSetDeficit deficit;
};

struct VerifyOptions {
    BulkOptions bulk;
    BoundaryOptions boundary;
    DeficitOptions deficit;
    std::size_t gradient_samples = 2000;
    std::uint64_t seed = 1;
};

// Terms of the boundary mass inequality on the exterior of the coordinate sphere sigma.
BoundaryInequalityReport verify_boundary_inequality(const HarmonicField& field, const SurfaceModel& sigma, const VerifyOptions& options = {});

struct FillinInequalityReport {
    double bulk_exterior = 0.0;
    double bulk_fillin = 0.0;
    double bulk_error = 0.0;
    double boundary_H_term = 0.0;
    double angle_term = 0.0;
    double angle_term_fillin = 0.0;
    double corner_term = 0.0;
    double chi_deficit = 0.0;
    double mass = 0.0;
    double rhs = 0.0;
    double residual = 0.0;   // mass - rhs
    double min_grad = 0.0;   // over sample points of both regions
    bool equality_expected = false;
    double tolerance = 0.0;
    bool passed = false;
    bool divergent = false;
};

// Evaluates the fill-in mass inequality on a transmission solution.
FillinInequalityReport verify_fillin_inequality(const HarmonicField& field, const VerifyOptions& options = {}, double tolerance = 1e-3);

struct ConditionCheck {
    double margin = 0.0;  // min over samples; >= 0 passes
    Vec3 witness = Vec3::Zero();
    bool passed = false;
};

struct VectorFieldConditionsReport {
    ConditionCheck fillin;    // R >= C1 |X|^2 - 2 div X on the fill-in
    ConditionCheck exterior;  // R >= C2 |Y|^2 - 2 div Y on the exterior
    ConditionCheck boundary;  // H - <Y, mu> <= H_Omega - <X, nu>
    bool decay_warning = false;
    bool constants_valid = false;
    bool nonnegative_mass_implied = false;
};

VectorFieldConditionsReport verify_vector_field_conditions(const GluedMetric& metric, const VectorFieldModel& X, const VectorFieldModel& Y,
                                     double C1, double C2, std::size_t samples = 4000, std::uint64_t seed = 1);

// Mass bound (1/16 pi) bulk - (1/4 pi) integral of (H + 2 dG/dmu) |grad u|
// for the Robin-corrected field of a coordinate sphere.
struct RobinReport {
    RobinSolution solution;
    double bulk = 0.0;
    double boundary = 0.0;   // integral of (H + 2 dG/dmu) |grad u|
    double bound = 0.0;
    double mass = 0.0;
};
RobinReport robin_mass_bound(const Metric& metric, double radius, const VerifyOptions& options = {});

}  // namespace mass_lab
