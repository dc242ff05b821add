#pragma once

#include "mass_lab/metric_models.hpp"
#include "mass_lab/surface_geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mass_lab {

// ds^2 = E(theta) dtheta^2 + Phi(theta)^2 dphi^2 on the sphere.
class RevolutionMetric {
public:
    using Sampler = std::function<double(double)>;

    static RevolutionMetric round(double radius);
    // E and Phi given on [0, pi]; derivatives by fourth-order differences.
    static RevolutionMetric from_functions(Sampler E, Sampler Phi, std::string label);
    // Induced metric of a revolution-symmetric surface in a radial metric.
    static RevolutionMetric induced(const SurfaceModel& surface, const Metric& metric, Side side = Side::exterior);

    [[nodiscard]] Jet E(double theta) const;
    [[nodiscard]] Jet Phi(double theta) const;
    [[nodiscard]] std::optional<double> round_radius() const { return round_; }
    [[nodiscard]] const std::string& describe() const { return label_; }
    // |Phi'(0) - sqrt(E(0))| + |Phi'(pi) + sqrt(E(pi))|
    [[nodiscard]] double pole_closure_residual() const;

private:
    [[nodiscard]] double e_ext(double t) const;
    [[nodiscard]] double phi_ext(double t) const;
    Sampler E_, Phi_;
    std::optional<double> round_;
    std::string label_;
};

// Profile rho = Phi, z' = -sqrt(E - Phi'^2) of the embedded surface.
struct EmbeddingResult {
    std::vector<double> theta;
    std::vector<double> rho, z, H0;
    double height = 0.0;            // z(0) - z(pi)
    double closure_residual = 0.0;  // adaptive height vs Gauss-Legendre height
    double margin = 0.0;            // min (E - Phi'^2) on the grid
    std::optional<double> round_radius;
    SurfaceModel surface;  // embedded profile in flat space, same parameters

    [[nodiscard]] double mean_curvature(double theta) const;
};

EmbeddingResult embed_revolution(const RevolutionMetric& metric, int n_grid = 256);

struct StudyOptions {
    double k1 = 0.05, k2 = 20.0;  // curvature window of the rescaled surfaces
    int bounds_grid = 128;
    int n_theta = 96;
};

struct StudyRow {
    double r = 0.0;
    double area = 0.0;
    double min_K = 0.0;
    double m_by = 0.0;
    std::string flag;  // empty when the row is valid
};

struct ConvergenceStudy {
    std::string family;
    std::vector<StudyRow> rows;
    double adm_mass = 0.0;
    std::optional<double> rate;   // p in |m_BY - m| ~ C r^-p
    std::optional<double> limit;  // extrapolated from successive differences
    bool monotone = false;        // |m_BY - m| decreasing along valid rows
};

ConvergenceStudy by_convergence_study(const Metric& metric, const SurfaceFamily& family,
                                      const std::vector<double>& r_list, const StudyOptions& options = {});

}  // namespace mass_lab
