#pragma once

#include "mass_lab/metric_models.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mass_lab {

enum class AdmMethod { surface_integral, conformal_flux };

std::string to_string(AdmMethod method);

struct AdmOptions {
    int n_theta = 64;
    int n_phi = 128;
    int levels = 4;          // radii r, 2r, 4r, ... when extrapolating
    double ratio = 2.0;
    int first_order = 1;     // leading error O(r^-first_order)
};

struct AdmResult {
    double mass = 0.0;
    std::vector<double> radii;
    std::vector<double> values;
    bool extrapolated = false;
    double extrapolation_error = 0.0;
    bool curvature_warning = false;  // scalar curvature not integrable
};

// (1/16pi) * surface integral of (d_i g_ij - d_j g_ii) nu^j over the coordinate
// sphere, or -(1/2pi) * surface integral of d_nu phi for g = phi^4 delta.
AdmResult adm_mass(const MetricModel& metric, double radius, AdmMethod method, bool extrapolate,
                   const AdmOptions& options = {});

// Surface integral at a single radius, without decay checks.
double adm_surface_integral(const MetricModel& metric, double radius, AdmMethod method, int n_theta = 64,
                            int n_phi = 128);

struct DecayReport {
    std::vector<double> radii;
    // Sup over each sphere of |g - delta|, |dg|, |ddg| (Frobenius) and |R|.
    std::array<std::vector<double>, 3> sup_norms;
    std::vector<double> sup_curvature;
    // Fitted decay orders, empty when the deviation vanishes identically.
    std::array<std::optional<double>, 3> orders;
    std::optional<double> curvature_order;
    bool exact = false;
    double tau = 0.0;  // smallest fitted order; 0 when exact
    bool tau_admissible = true;
    bool curvature_integrable = true;
};

DecayReport decay_report(const MetricModel& metric, const std::vector<double>& radii, int n_theta = 12,
                         int n_phi = 24);

// Vector field X^i(x) with a declared decay order |X| = O(|x|^-order).
class VectorFieldModel {
public:
    VectorFieldModel() = default;
    VectorFieldModel(std::function<Vec3(const Vec3&)> components, double decay_order, std::string label);

    static VectorFieldModel zero();

    [[nodiscard]] Vec3 operator()(const Vec3& x) const;
    [[nodiscard]] double decay_order() const { return decay_order_; }
    [[nodiscard]] const std::string& label() const { return label_; }
    [[nodiscard]] bool is_zero() const { return !components_; }

    // Riemannian divergence (1/sqrt(g)) d_i (sqrt(g) X^i) by central differences.
    [[nodiscard]] double divergence(const MetricModel& metric, const Vec3& x, Side side = Side::exterior) const;
    // |X|_g
    [[nodiscard]] double norm(const MetricModel& metric, const Vec3& x, Side side = Side::exterior) const;

    struct DecayCheck {
        double fitted_order = 0.0;
        bool consistent = true;
    };
    // Fits sup |X| over coordinate spheres; consistent when the fit is within
    // 0.05 of the declared order or faster.
    [[nodiscard]] DecayCheck check_decay(const std::vector<double>& radii) const;

private:
    std::function<Vec3(const Vec3&)> components_;
    double decay_order_ = 0.0;
    std::string label_ = "zero";
};

// Nodes (x, weight) of a Gauss-Legendre x uniform product rule on the unit sphere.
struct SphereNode {
    Vec3 direction;
    double weight;  // includes sin(theta) dtheta dphi
};
std::vector<SphereNode> sphere_rule(int n_theta, int n_phi);

}  // namespace mass_lab
