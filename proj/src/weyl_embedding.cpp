#include "mass_lab/weyl_embedding.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/mass_functionals.hpp"
#include "mass_lab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mass_lab {

namespace {

constexpr double fd_step = 2e-3;

// Fourth-order central differences of a sampled function.
Jet difference_jet(const std::function<double(double)>& f, double t) {
    const double h = fd_step;
    const double fm2 = f(t - 2 * h), fm1 = f(t - h), f0 = f(t), fp1 = f(t + h), fp2 = f(t + 2 * h);
    return {f0, (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h),
            (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)};
}

double reflect(double t) {
    if (t < 0.0) return -t;
    if (t > pi) return 2 * pi - t;
    return t;
}

}  // namespace

RevolutionMetric RevolutionMetric::round(double radius) {
    if (!(radius > 0.0)) throw ArgumentError("round metric radius must be positive");
    std::ostringstream os;
    os << "round(rho=" << radius << ")";
    RevolutionMetric m = from_functions([radius](double) { return radius * radius; },
                                        [radius](double t) { return radius * std::sin(t); }, os.str());
    m.round_ = radius;
    return m;
}

RevolutionMetric RevolutionMetric::from_functions(Sampler E, Sampler Phi, std::string label) {
    RevolutionMetric m;
    m.E_ = std::move(E);
    m.Phi_ = std::move(Phi);
    m.label_ = std::move(label);
    return m;
}

RevolutionMetric RevolutionMetric::induced(const SurfaceModel& surface, const Metric& metric, Side side) {
    if (!surface.revolution_symmetric())
        throw CapabilityError(surface.describe() + " is not symmetric about the z axis");
    if (!metric->is_radial())
        throw CapabilityError("induced revolution metrics need a spherically symmetric ambient metric, got " +
                              metric->describe());
    auto E = [surface, metric, side](double t) {
        const SurfacePoint p = surface.eval(t, 0.0);
        return p.xt.dot(side_ambient(*metric, side).jet(p.x, side).g * p.xt);
    };
    auto Phi = [surface, metric, side](double t) {
        const SurfacePoint p = surface.eval(t, 0.0);
        return std::sqrt(std::max(0.0, p.xp.dot(side_ambient(*metric, side).jet(p.x, side).g * p.xp)));
    };
    RevolutionMetric m = from_functions(E, Phi, "induced(" + surface.describe() + ", " + metric->describe() + ")");
    if (surface.is_coordinate_sphere()) {
        const double r = surface.sphere_radius();
        m.round_ = r * std::sqrt(metric->radial_jets(r, side).B.v);
    }
    return m;
}

double RevolutionMetric::e_ext(double t) const { return E_(reflect(t)); }

double RevolutionMetric::phi_ext(double t) const {
    const double v = Phi_(reflect(t));
    return (t < 0.0 || t > pi) ? -v : v;
}

Jet RevolutionMetric::E(double theta) const {
    return difference_jet([this](double t) { return e_ext(t); }, theta);
}

Jet RevolutionMetric::Phi(double theta) const {
    return difference_jet([this](double t) { return phi_ext(t); }, theta);
}

double RevolutionMetric::pole_closure_residual() const {
    return std::abs(Phi(0.0).d1 - std::sqrt(e_ext(0.0))) + std::abs(Phi(pi).d1 + std::sqrt(e_ext(pi)));
}

namespace {

// Slope w = sqrt(E - Phi'^2) of the profile, z' = -w. Near a pole E - Phi'^2
// loses all significant digits, so w(s) = s P(s^2) is interpolated from
// samples further out (s: distance to the pole).
class ProfileSlope {
public:
    explicit ProfileSlope(const RevolutionMetric& metric) : metric_(&metric) {
        for (int pole = 0; pole < 2; ++pole) {
            std::array<double, 4> s2{}, q{};
            for (int k = 0; k < 4; ++k) {
                const double s = pole_window + 0.02 * k;
                s2[static_cast<std::size_t>(k)] = s * s;
                q[static_cast<std::size_t>(k)] = direct(pole == 0 ? s : pi - s).v / s;
            }
            // Newton divided differences in s^2.
            auto& c = coeff_[static_cast<std::size_t>(pole)];
            c = q;
            for (int j = 1; j < 4; ++j)
                for (int i = 3; i >= j; --i) {
                    const auto u = static_cast<std::size_t>(i);
                    c[u] = (c[u] - c[u - 1]) / (s2[u] - s2[u - static_cast<std::size_t>(j)]);
                }
            nodes_[static_cast<std::size_t>(pole)] = s2;
        }
    }

    // (w, dw/dtheta)
    [[nodiscard]] std::pair<double, double> operator()(double t) const {
        if (t < pole_window) {
            const auto [w, dw] = near_pole(0, t);
            return {w, dw};
        }
        if (t > pi - pole_window) {
            const auto [w, dw] = near_pole(1, pi - t);
            return {w, -dw};
        }
        const Jet j = direct(t);
        return {j.v, j.d1};
    }

    static constexpr double pole_window = 0.03;

private:
    [[nodiscard]] Jet direct(double t) const {
        const Jet E = metric_->E(t), P = metric_->Phi(t);
        const double D = std::max(0.0, E.v - P.d1 * P.d1);
        const double w = std::sqrt(D);
        const double dD = E.d1 - 2.0 * P.d1 * P.d2;
        return {w, w > 0.0 ? dD / (2.0 * w) : 0.0, 0.0};
    }

    // w and dw/ds at distance s from a pole.
    [[nodiscard]] std::pair<double, double> near_pole(int pole, double s) const {
        const auto& c = coeff_[static_cast<std::size_t>(pole)];
        const auto& x = nodes_[static_cast<std::size_t>(pole)];
        const double y = s * s;
        // P(y) and P'(y) by nested Newton form.
        double p = c[3], dp = 0.0;
        for (int i = 2; i >= 0; --i) {
            dp = dp * (y - x[static_cast<std::size_t>(i)]) + p;
            p = p * (y - x[static_cast<std::size_t>(i)]) + c[static_cast<std::size_t>(i)];
        }
        return {s * p, p + 2.0 * y * dp};
    }

    const RevolutionMetric* metric_;
    std::array<std::array<double, 4>, 2> coeff_{}, nodes_{};
};

struct ProfileData {
    RevolutionMetric metric;
    ProfileSlope slope;
    std::vector<double> theta, z;

    explicit ProfileData(RevolutionMetric m) : metric(std::move(m)), slope(metric) {}

    [[nodiscard]] double z_at(double t) const {
        t = std::clamp(t, 0.0, pi);
        const double step = pi / static_cast<double>(theta.size() - 1);
        const std::size_t i = std::min(theta.size() - 2, static_cast<std::size_t>(t / step));
        return z[i] - numerics::integrate_gl([this](double s) { return slope(s).first; }, theta[i], t, 12);
    }
};

}  // namespace

double EmbeddingResult::mean_curvature(double theta) const {
    if (round_radius) return 2.0 / *round_radius;
    return fundamental_forms(surface, *make_flat(), regular_theta(theta), 0.0).H;
}

EmbeddingResult embed_revolution(const RevolutionMetric& metric, int n_grid) {
    if (n_grid < 8) throw ArgumentError("embedding grid needs at least 8 intervals");
    EmbeddingResult out;
    out.round_radius = metric.round_radius();
    const std::size_t n = static_cast<std::size_t>(n_grid) + 1;
    out.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.theta[i] = pi * static_cast<double>(i) / n_grid;

    // Embeddability on the grid, away from the pole samples where both terms vanish.
    out.margin = std::numeric_limits<double>::infinity();
    for (double t : out.theta) {
        const Jet E = metric.E(t), P = metric.Phi(t);
        const double D = E.v - P.d1 * P.d1;
        if (D < -1e-8 * E.v) {
            std::ostringstream os;
            os << metric.describe() << " is not embeddable as a surface of revolution: E - Phi'^2 = " << D
               << " at theta=" << t;
            throw EmbeddingError(os.str(), t);
        }
        out.margin = std::min(out.margin, D);
    }

    if (out.round_radius) {
        const double R = *out.round_radius;
        out.surface = SurfaceModel::coordinate_sphere(R);
        for (double t : out.theta) {
            out.rho.push_back(R * std::sin(t));
            out.z.push_back(R * std::cos(t));
            out.H0.push_back(2.0 / R);
        }
        out.height = 2.0 * R;
        return out;
    }

    auto data = std::make_shared<ProfileData>(metric);
    data->theta = out.theta;
    auto w = [&data](double s) { return data->slope(s).first; };
    std::vector<double> pieces(n - 1);
    kernels::map_parallel(n - 1, [&](std::size_t i) {
        pieces[i] = numerics::integrate_adaptive(w, out.theta[i], out.theta[i + 1], 1e-10);
    });
    double total = 0.0;
    for (double p : pieces) total += p;
    out.height = total;
    out.closure_residual = std::abs(total - numerics::integrate_gl(w, 0.0, pi, 96));
    data->z.resize(n);
    data->z[0] = 0.5 * total;
    for (std::size_t i = 1; i < n; ++i) data->z[i] = data->z[i - 1] - pieces[i - 1];

    RevolutionProfile profile;
    profile.rho = [data](double t) { return data->metric.Phi(t); };
    profile.z = [data](double t) {
        const auto [wv, dw] = data->slope(t);
        return Jet{data->z_at(t), -wv, -dw};
    };
    out.surface = SurfaceModel::revolution(std::move(profile), "embedding(" + metric.describe() + ")");
    out.z = data->z;
    out.rho.reserve(n);
    for (double t : out.theta) out.rho.push_back(metric.Phi(t).v);
    out.H0.resize(n);
    kernels::map_parallel(n, [&](std::size_t i) { out.H0[i] = out.mean_curvature(out.theta[i]); });
    return out;
}

ConvergenceStudy by_convergence_study(const Metric& metric, const SurfaceFamily& family,
                                      const std::vector<double>& r_list, const StudyOptions& options) {
    if (r_list.empty()) throw ArgumentError("convergence study needs at least one radius");
    ConvergenceStudy study;
    study.family = family.label;
    study.adm_mass = reference_mass(*metric);
    for (double r : r_list) {
        if (!(r > 0.0)) throw ArgumentError("study radii must be positive");
        StudyRow row;
        row.r = r;
        row.m_by = std::numeric_limits<double>::quiet_NaN();
        const SurfaceModel surface = family.at(r);
        try {
            const SurfaceTotals totals = surface_totals(surface, *metric, options.n_theta, 2 * options.n_theta);
            row.area = totals.area;
            row.min_K = totals.min_K;
            const PrincipalBounds bounds = principal_bounds(family, r, options.k1, options.k2, options.bounds_grid);
            const EmbeddingResult emb = embed_revolution(RevolutionMetric::induced(surface, metric));
            row.m_by = brown_york(surface, *metric, emb, options.n_theta);
            if (!bounds.satisfies) {
                std::ostringstream os;
                os << "curvature bounds violated (kappa in [" << bounds.min_kappa << ", " << bounds.max_kappa
                   << "])";
                row.flag = os.str();
            }
        } catch (const PreconditionError& e) {
            row.flag = e.what();
        } catch (const DomainError& e) {
            row.flag = e.what();
        }
        study.rows.push_back(std::move(row));
    }

    std::vector<const StudyRow*> valid;
    for (const StudyRow& row : study.rows)
        if (row.flag.empty() && std::isfinite(row.m_by)) valid.push_back(&row);
    std::vector<double> lx, ly;
    for (const StudyRow* row : valid) {
        const double d = std::abs(row->m_by - study.adm_mass);
        if (d > 1e-14) {
            lx.push_back(std::log(row->r));
            ly.push_back(std::log(d));
        }
    }
    if (lx.size() >= 2) study.rate = -numerics::least_squares_line(lx, ly).slope;
    if (valid.size() >= 2) {
        const StudyRow& a = *valid[valid.size() - 2];
        const StudyRow& b = *valid.back();
        const double diff = a.m_by - b.m_by;
        if (std::abs(diff) < 1e-14) {
            study.limit = b.m_by;
        } else if (study.rate && *study.rate > 0.0) {
            const double p = *study.rate;
            const double C = diff / (std::pow(a.r, -p) - std::pow(b.r, -p));
            study.limit = b.m_by - C * std::pow(b.r, -p);
        }
    } else if (valid.size() == 1) {
        study.limit = valid.front()->m_by;
    }
    study.monotone = !valid.empty();
    for (std::size_t i = 1; i < valid.size(); ++i)
        if (std::abs(valid[i]->m_by - study.adm_mass) > std::abs(valid[i - 1]->m_by - study.adm_mass) + 1e-12)
            study.monotone = false;
    return study;
}

}  // namespace mass_lab
