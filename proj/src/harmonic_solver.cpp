#include "mass_lab/harmonic_solver.hpp"

#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mass_lab {

std::string to_string(Representation r) { return r == Representation::separated ? "separated" : "grid3d"; }

// ---------------------------------------------------------------------------
// Radial profiles

RadialProfile::RadialProfile(std::vector<double> r, std::vector<Jet> samples, JetFn tail, SecondDerivative second)
    : r_(std::move(r)), f_(std::move(samples)), tail_(std::move(tail)), second_(std::move(second)) {
    if (r_.size() < 2 || r_.size() != f_.size()) throw ArgumentError("radial profile needs matching nodes and samples");
}

RadialProfile RadialProfile::with_samples(std::vector<Jet> samples) const {
    return RadialProfile(r_, std::move(samples), tail_, second_);
}

Jet RadialProfile::eval(double r) const {
    if (tail_ && r > r_.back()) return tail_(r);
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = it == r_.begin() ? 0 : static_cast<std::size_t>(it - r_.begin()) - 1;
    i = std::min(i, r_.size() - 2);
    const Jet& a = f_[i];
    const Jet& b = f_[i + 1];
    const auto s = numerics::quintic_hermite(r_[i], {a.v, a.d1, a.d2}, r_[i + 1], {b.v, b.d1, b.d2}, r);
    return {s.v, s.d1, second_ ? second_(r, s.v, s.d1) : s.d2};
}

namespace {

// ---------------------------------------------------------------------------
// Radial ODE (P f')' = lambda sqrt(A) f with P = B r^2 / sqrt(A).

struct OdeCoefficients {
    double P, dP, w, sqrtA;
};

OdeCoefficients ode_coefficients(const MetricModel& m, Side side, double r, double lambda) {
    const RadialJets ab = m.radial_jets(r, side);
    const double sa = std::sqrt(ab.A.v);
    OdeCoefficients c{};
    c.sqrtA = sa;
    c.P = ab.B.v * r * r / sa;
    c.dP = (ab.B.d1 * r * r + 2.0 * ab.B.v * r) / sa - ab.B.v * r * r * ab.A.d1 / (2.0 * ab.A.v * sa);
    c.w = lambda * sa;
    return c;
}

Jet ode_jet(const MetricModel& m, Side side, double r, double lambda, double f, double df) {
    const OdeCoefficients c = ode_coefficients(m, side, r, lambda);
    return {f, df, (c.w * f - c.dP * df) / c.P};
}

RadialProfile::SecondDerivative radial_equation(Metric m, Side side, double lambda) {
    return [m = std::move(m), side, lambda](double r, double f, double df) {
        return ode_jet(*m, side, r, lambda, f, df).d2;
    };
}

std::vector<double> log_nodes(double a, double b, double step) {
    const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(std::log(b / a) / step)));
    std::vector<double> r(n + 1);
    const double d = std::log(b / a) / static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) r[k] = a * std::exp(d * static_cast<double>(k));
    r.front() = a;
    r.back() = b;
    return r;
}

std::vector<double> radial_mesh(double a, double b, const SolverOptions& opt) {
    const double lo = std::max(a, opt.refine_lo), hi = std::min(b, opt.refine_hi);
    if (!(opt.refine_step > 0.0) || !(hi > lo)) return log_nodes(a, b, opt.log_step);
    std::vector<double> r;
    auto append = [&](double x, double y, double step) {
        if (!(y > x)) return;
        const std::vector<double> piece = log_nodes(x, y, step);
        r.insert(r.end(), piece.begin() + (r.empty() ? 0 : 1), piece.end());
    };
    append(a, lo, opt.log_step);
    append(lo, hi, opt.refine_step);
    append(hi, b, opt.log_step);
    return r;
}

// Three-stage Gauss collocation in s = ln r for y = (f, P f').
class RadialIntegrator {
public:
    RadialIntegrator(const MetricModel& m, Side side, double lambda) : m_(m), side_(side), lambda_(lambda) {}

    // Values on the nodes; the start is the back node when inward. With D
    // given, also accumulates the integral of 1 / (P f^2) - r^2 from the start
    // on the collocation stages.
    std::vector<Jet> run(const std::vector<double>& nodes, bool inward, double f0, double df0,
                         std::vector<double>* D = nullptr) const {
        const std::size_t n = nodes.size();
        std::vector<Jet> out(n);
        const std::size_t first = inward ? n - 1 : 0;
        Vec2 y(f0, ode_coefficients(m_, side_, nodes[first], lambda_).P * df0);
        out[first] = ode_jet(m_, side_, nodes[first], lambda_, f0, df0);
        for (std::size_t step = 1; step < n; ++step) {
            const std::size_t from = inward ? n - step : step - 1;
            const std::size_t to = inward ? n - step - 1 : step;
            double dJ = 0.0;
            y = advance(y, std::log(nodes[from]), std::log(nodes[to]) - std::log(nodes[from]), dJ);
            if (D) (*D)[to] = (*D)[from] + dJ;
            const double P = ode_coefficients(m_, side_, nodes[to], lambda_).P;
            out[to] = ode_jet(m_, side_, nodes[to], lambda_, y[0], y[1] / P);
        }
        return out;
    }

private:
    [[nodiscard]] Mat2 matrix(double s) const {
        const double r = std::exp(s);
        const OdeCoefficients c = ode_coefficients(m_, side_, r, lambda_);
        Mat2 M;
        M << 0.0, r / c.P, r * c.w, 0.0;
        return M;
    }

    [[nodiscard]] Vec2 advance(const Vec2& y, double s, double h, double& dJ) const {
        static const double q = std::sqrt(15.0);
        static const double c[3] = {0.5 - q / 10.0, 0.5, 0.5 + q / 10.0};
        static const double A[3][3] = {{5.0 / 36, 2.0 / 9 - q / 15, 5.0 / 36 - q / 30},
                                       {5.0 / 36 + q / 24, 2.0 / 9, 5.0 / 36 - q / 24},
                                       {5.0 / 36 + q / 30, 2.0 / 9 + q / 15, 5.0 / 36}};
        static const double b[3] = {5.0 / 18, 4.0 / 9, 5.0 / 18};
        Mat2 M[3];
        for (int i = 0; i < 3; ++i) M[i] = matrix(s + c[i] * h);
        Eigen::Matrix<double, 6, 6> L = Eigen::Matrix<double, 6, 6>::Identity();
        Eigen::Matrix<double, 6, 1> rhs;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) L.block<2, 2>(2 * i, 2 * j) -= h * A[i][j] * M[i];
            rhs.segment<2>(2 * i) = M[i] * y;
        }
        const Eigen::Matrix<double, 6, 1> K = L.partialPivLu().solve(rhs);
        Vec2 out = y;
        dJ = 0.0;
        for (int i = 0; i < 3; ++i) {
            out += h * b[i] * K.segment<2>(2 * i);
            Vec2 stage = y;
            for (int j = 0; j < 3; ++j) stage += h * A[i][j] * K.segment<2>(2 * j);
            const double r = std::exp(s + c[i] * h);
            dJ += h * b[i] * (M[i](0, 1) / (stage[0] * stage[0]) - r * r * r);
        }
        return out;
    }

    const MetricModel& m_;
    Side side_;
    double lambda_;
};

// r^k B^(-1/4), the asymptotic form of degree-one solutions.
Jet asymptotic_form(const MetricModel& m, double r, double k) {
    const Jet B = m.radial_jets(r).B;
    const double q = std::pow(B.v, -0.25);
    const double dq = -0.25 * B.d1 * q / B.v;
    const double ddq = -0.25 * B.d2 * q / B.v + (5.0 / 16.0) * B.d1 * B.d1 * q / (B.v * B.v);
    const double p = std::pow(r, k), dp = k * p / r, ddp = k * (k - 1.0) * p / (r * r);
    return {p * q, dp * q + p * dq, ddp * q + 2.0 * dp * dq + p * ddq};
}

Jet combine(double a, const Jet& x, double b, const Jet& y) {
    return {a * x.v + b * y.v, a * x.d1 + b * y.d1, a * x.d2 + b * y.d2};
}

// Growing and decaying degree-one solutions on [r0, r_max]. The decaying one
// is integrated inward from its asymptotic form; the growing one is
// 3 f2 J with J' = 1 / (P f2^2), J(r_max) = r_max^3 / 3.
struct ExteriorBasis {
    Metric metric;  // side metric used for r >= r0
    std::vector<double> r;
    std::vector<Jet> growing, decaying;

    [[nodiscard]] RadialProfile profile(double growth, double dipole) const {
        std::vector<Jet> f(r.size());
        for (std::size_t k = 0; k < r.size(); ++k) f[k] = combine(growth, growing[k], dipole, decaying[k]);
        Metric m = metric;
        JetFn tail = [m, growth, dipole](double x) {
            return combine(growth, asymptotic_form(*m, x, 1.0), dipole, asymptotic_form(*m, x, -2.0));
        };
        return RadialProfile(r, std::move(f), std::move(tail), radial_equation(metric, Side::exterior, 2.0));
    }
};

ExteriorBasis exterior_basis(const Metric& metric, double r0, const SolverOptions& opt) {
    if (!metric->asymptotically_flat()) throw PreconditionError(metric->describe() + " is not asymptotically flat");
    ExteriorBasis basis;
    basis.metric = metric;
    const double r_max = opt.r_max_factor * r0;
    basis.r = radial_mesh(r0, r_max, opt);
    const MetricModel& m = *metric;
    const Jet start = asymptotic_form(m, r_max, -2.0);
    const std::size_t n = basis.r.size();
    // J = r^3 / 3 + deviation, so only the small deviation is accumulated.
    std::vector<double> J(n, 0.0);
    basis.decaying = RadialIntegrator(m, Side::exterior, 2.0).run(basis.r, true, start.v, start.d1, &J);
    for (std::size_t k = 0; k < n; ++k) J[k] += basis.r[k] * basis.r[k] * basis.r[k] / 3.0;
    basis.growing.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Jet& d = basis.decaying[k];
        const double dJ = 1.0 / (ode_coefficients(m, Side::exterior, basis.r[k], 2.0).P * d.v * d.v);
        basis.growing[k] = ode_jet(m, Side::exterior, basis.r[k], 2.0, 3.0 * d.v * J[k], 3.0 * (d.d1 * J[k] + d.v * dJ));
    }
    return basis;
}

// Degree-one solution regular at the origin with f ~ r.
RadialProfile regular_interior(const Metric& m, Side side, double r0, const SolverOptions& opt) {
    const std::vector<double> r = radial_mesh(opt.start_fraction * r0, r0, opt);
    return RadialProfile(r, RadialIntegrator(*m, side, 2.0).run(r, false, r.front(), 1.0), {},
                         radial_equation(m, side, 2.0));
}

double radial_speed(const MetricModel& m, Side side, double r) { return std::sqrt(m.radial_jets(r, side).A.v); }

// ---------------------------------------------------------------------------
// Field implementations

FieldSample degree_one_sample(const Jet& f, const Vec3& x) {
    FieldSample s;
    const double r = x.norm();
    if (r == 0.0) {
        s.grad = Vec3(f.d1, 0.0, 0.0);
        return s;
    }
    const double F = f.v / r;
    const double dF = f.d1 / r - f.v / (r * r);
    const double ddF = f.d2 / r - 2.0 * f.d1 / (r * r) + 2.0 * f.v / (r * r * r);
    const Vec3 n = x / r;
    const double x1 = x[0];
    s.u = F * x1;
    s.grad = dF * x1 * n;
    s.grad[0] += F;
    const Vec3 e1 = Vec3::UnitX();
    s.hess = (ddF - dF / r) * x1 * (n * n.transpose()) +
             (dF / r) * (x1 * Mat3::Identity() + x * e1.transpose() + e1 * x.transpose());
    return s;
}

FieldSample degree_zero_sample(const Jet& f, const Vec3& x) {
    FieldSample s;
    const double r = x.norm();
    s.u = f.v;
    if (r == 0.0) return s;
    const Vec3 n = x / r;
    s.grad = f.d1 * n;
    s.hess = f.d2 * (n * n.transpose()) + (f.d1 / r) * (Mat3::Identity() - n * n.transpose());
    return s;
}

}  // namespace

class HarmonicField::Impl {
public:
    virtual ~Impl() = default;
    [[nodiscard]] virtual Representation representation() const = 0;
    [[nodiscard]] virtual FieldSample sample(const Vec3& x, Side side) const = 0;
    [[nodiscard]] virtual const RadialMode* separated() const { return nullptr; }
    [[nodiscard]] virtual const GridField* grid() const { return nullptr; }
    [[nodiscard]] virtual std::optional<TransmissionData> transmission() const { return std::nullopt; }

    Metric metric;
    std::string label;
    double epsilon = 0.0;
    double tolerance = 0.0;
    double split_radius = 0.0;  // sides are split at this radius
    bool boundary = false;
    bool fillin = false;
};

namespace {

class SeparatedImpl final : public HarmonicField::Impl {
public:
    explicit SeparatedImpl(RadialMode mode) : mode_(std::move(mode)) {}
    [[nodiscard]] Representation representation() const override { return Representation::separated; }
    [[nodiscard]] const RadialMode* separated() const override { return &mode_; }

    [[nodiscard]] FieldSample sample(const Vec3& x, Side side) const override {
        const bool inside = side == Side::interior && !mode_.interior.empty();
        const Jet f = (inside ? mode_.interior : mode_.exterior).eval(x.norm());
        return mode_.degree == 1 ? degree_one_sample(f, x) : degree_zero_sample(f, x);
    }

    [[nodiscard]] std::optional<TransmissionData> transmission() const override {
        if (!fillin) return std::nullopt;
        const GluedMetric& glued = *metric->as_glued();
        const double r0 = mode_.inner_radius;
        TransmissionData t;
        t.interface_radius = r0;
        const auto fill = [&](Side side, double& trace, double& flux, double& second) {
            const Jet f = (side == Side::exterior ? mode_.exterior : mode_.interior).eval(r0);
            const RadialJets ab = glued.side_metric(side)->radial_jets(r0, side);
            // Coefficients of x_1 / r along radial geodesics.
            trace = f.v;
            flux = f.d1 / std::sqrt(ab.A.v);
            second = f.d2 / ab.A.v - f.d1 * ab.A.d1 / (2.0 * ab.A.v * ab.A.v);
        };
        fill(Side::exterior, t.trace_exterior, t.flux_exterior, t.normal_second_exterior);
        fill(Side::interior, t.trace_interior, t.flux_interior, t.normal_second_interior);
        return t;
    }

private:
    RadialMode mode_;
};

class GridImpl final : public HarmonicField::Impl {
public:
    explicit GridImpl(GridField grid) : grid_(std::move(grid)) {}
    [[nodiscard]] Representation representation() const override { return Representation::grid3d; }
    [[nodiscard]] const GridField* grid() const override { return &grid_; }
    [[nodiscard]] FieldSample sample(const Vec3& x, Side) const override { return grid_.sample(x); }

private:
    GridField grid_;
};

HarmonicField make_separated(RadialMode mode, Metric metric, std::string label, const SolverOptions& opt,
                             double split_radius, bool boundary, bool fillin) {
    mode.epsilon = opt.epsilon < 0.0 ? 0.0 : opt.epsilon;
    auto impl = std::make_shared<SeparatedImpl>(std::move(mode));
    impl->metric = std::move(metric);
    impl->label = std::move(label);
    impl->epsilon = impl->separated()->epsilon;
    impl->tolerance = opt.tolerance;
    impl->split_radius = split_radius;
    impl->boundary = boundary;
    impl->fillin = fillin;
    return HarmonicField(std::move(impl));
}

std::string format_label(const std::string& what, const MetricModel& m) {
    std::ostringstream os;
    os << what << " on " << m.describe();
    return os.str();
}

// ---------------------------------------------------------------------------
// grid3d

Metric conformally_flat_or_throw(const Metric& metric) {
    if (!metric->conformal_factor())
        throw CapabilityError("grid3d solves need a conformally flat metric; " + metric->describe() + " is not");
    return metric;
}

class GridSolver {
public:
    GridSolver(Metric metric, double r0, double dirichlet_value, const SolverOptions& opt)
        : metric_(std::move(metric)), phi_(*metric_->conformal_factor()), r0_(r0), value_(dirichlet_value), opt_(opt) {
        const double scale = r0 > 0.0 ? r0 : 1.0;
        L_ = opt.grid_half_width * scale;
        n_ = static_cast<std::size_t>(std::llround(opt.grid_half_width / opt.grid_spacing));
        if (n_ < 8) throw ArgumentError("grid3d needs at least 8 cells per axis");
        if (r0 > 0.0 && !(L_ > 2.0 * r0)) throw ArgumentError("grid3d box must extend beyond twice the inner radius");
        h_ = L_ / static_cast<double>(n_);
    }

    GridField solve() {
        assemble();
        // u = u_data + b u_dipole, with b consistent with the far-field fit.
        const std::size_t N = n_ * n_ * n_;
        std::vector<double> u_data(N, 0.0), u_dipole(N, 0.0);
        double res_data = 0.0, res_dipole = 0.0;
        int iterations = cg(rhs_data_, u_data, res_data);
        iterations = std::max(iterations, cg(rhs_dipole_, u_dipole, res_dipole));
        const double fit_data = fit_dipole(u_data, true);
        const double fit_dipole_part = fit_dipole(u_dipole, false);
        if (!(std::abs(1.0 - fit_dipole_part) > 1e-12)) throw SolverError("grid3d far-field fit is singular");
        const double dipole = fit_data / (1.0 - fit_dipole_part);
        std::vector<double> x(N);
        for (std::size_t i = 0; i < N; ++i) x[i] = u_data[i] + dipole * u_dipole[i];

        GridField::Data d;
        d.n = n_;
        d.h = h_;
        d.half_width = L_;
        d.inner_radius = r0_;
        d.boundary_value = value_;
        d.far_dipole = dipole;
        d.values = std::move(x);
        d.active = active_;
        d.residual = std::max(res_data, res_dipole);
        d.iterations = iterations;
        d.metric = metric_;
        return GridField(std::move(d));
    }

private:
    [[nodiscard]] Vec3 centre(std::size_t i, std::size_t j, std::size_t k) const {
        return {(static_cast<double>(i) + 0.5) * h_, (static_cast<double>(j) + 0.5) * h_,
                (static_cast<double>(k) + 0.5) * h_};
    }
    [[nodiscard]] double conductivity(const Vec3& p) const {
        const double f = phi_.value(p);
        return f * f;
    }
    // Far-field data x_1 / phi and its dipole part x_1 / (r^3 phi).
    [[nodiscard]] double far_value(const Vec3& p) const { return p[0] / phi_.value(p); }
    [[nodiscard]] double far_dipole(const Vec3& p) const {
        const double r = p.norm();
        return p[0] / (r * r * r * phi_.value(p));
    }
    [[nodiscard]] bool inside(const Vec3& p) const { return r0_ > 0.0 && p.norm() <= r0_; }

    // Distance from p to the sphere along direction e (unit coordinate vector).
    [[nodiscard]] double cut_distance(const Vec3& p, const Vec3& e) const {
        const double b = p.dot(e);
        const double c0 = p.squaredNorm() - r0_ * r0_;
        return c0 / (-b + std::sqrt(std::max(0.0, b * b - c0)));
    }

    void assemble() {
        const std::size_t N = n_ * n_ * n_;
        op_.nx = op_.ny = op_.nz = n_;
        op_.diag.assign(N, 0.0);
        op_.cx.assign(N, 0.0);
        op_.cy.assign(N, 0.0);
        op_.cz.assign(N, 0.0);
        rhs_data_.assign(N, 0.0);
        rhs_dipole_.assign(N, 0.0);
        active_.assign(N, 0);
        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t i = 0; i < n_; ++i) active_[op_.index(i, j, k)] = inside(centre(i, j, k)) ? 0 : 1;

        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t i = 0; i < n_; ++i) {
                    const std::size_t c = op_.index(i, j, k);
                    if (!active_[c]) {
                        op_.diag[c] = 1.0;
                        continue;
                    }
                    const Vec3 p = centre(i, j, k);
                    const std::size_t idx[3] = {i, j, k};
                    std::vector<double>* coupling[3] = {&op_.cx, &op_.cy, &op_.cz};
                    for (int a = 0; a < 3; ++a) {
                        const Vec3 e = Vec3::Unit(a);
                        // + direction
                        if (idx[a] + 1 == n_) {
                            const Vec3 face = p + 0.5 * h_ * e;
                            const double kf = conductivity(face);
                            op_.diag[c] += 2.0 * kf;
                            rhs_data_[c] += 2.0 * kf * far_value(face);
                            rhs_dipole_[c] += 2.0 * kf * far_dipole(face);
                        } else {
                            link(c, p, e, neighbour(i, j, k, a, +1), (*coupling[a])[c], true);
                        }
                        // - direction
                        if (idx[a] == 0) {
                            // x_1 = 0 is antisymmetric; the other planes are mirrors.
                            if (a == 0) op_.diag[c] += 2.0 * conductivity(p - 0.5 * h_ * e);
                        } else {
                            double unused = 0.0;
                            link(c, p, -e, neighbour(i, j, k, a, -1), unused, false);
                        }
                    }
                }
    }

    [[nodiscard]] std::size_t neighbour(std::size_t i, std::size_t j, std::size_t k, int axis, int dir) const {
        std::size_t id[3] = {i, j, k};
        id[axis] = dir > 0 ? id[axis] + 1 : id[axis] - 1;
        return op_.index(id[0], id[1], id[2]);
    }

    void link(std::size_t c, const Vec3& p, const Vec3& e, std::size_t nb, double& coupling, bool store) {
        if (active_[nb]) {
            const double kf = conductivity(p + 0.5 * h_ * e);
            op_.diag[c] += kf;
            if (store) coupling = kf;
            return;
        }
        const double theta = std::clamp(cut_distance(p, e) / h_, 1e-6, 1.0);
        const Vec3 hit = p + theta * h_ * e;
        const double kf = conductivity(p + 0.5 * theta * h_ * e);
        op_.diag[c] += kf / theta;
        rhs_data_[c] += kf / theta * value_ * hit[0] / r0_;
    }

    int cg(const std::vector<double>& rhs, std::vector<double>& x, double& residual) const {
        const std::size_t N = x.size();
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            opt_.parallel ? kernels::apply_parallel(op_, in, out) : kernels::apply_serial(op_, in, out);
        };
        auto dot = [&](std::span<const double> a, std::span<const double> b) {
            return opt_.parallel ? kernels::dot_parallel(a, b) : kernels::dot_serial(a, b);
        };
        std::vector<double> r(N), z(N), p(N), Ap(N);
        apply(x, Ap);
        for (std::size_t i = 0; i < N; ++i) r[i] = rhs[i] - Ap[i];
        const double bnorm = std::sqrt(dot(rhs, rhs));
        if (bnorm == 0.0) {
            residual = 0.0;
            return 0;
        }
        for (std::size_t i = 0; i < N; ++i) z[i] = r[i] / op_.diag[i];
        p = z;
        double rz = dot(r, z);
        for (int it = 1; it <= opt_.cg_max_iterations; ++it) {
            apply(p, Ap);
            const double alpha = rz / dot(p, Ap);
#pragma omp parallel for if (opt_.parallel)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
                z[i] = r[i] / op_.diag[i];
            }
            residual = std::sqrt(dot(r, r)) / bnorm;
            if (!std::isfinite(residual)) throw SolverError("grid3d conjugate gradients diverged");
            if (residual < opt_.cg_tolerance) return it;
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
#pragma omp parallel for if (opt_.parallel)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) p[i] = z[i] + beta * p[i];
        }
        std::ostringstream os;
        os << "grid3d conjugate gradients did not reach " << opt_.cg_tolerance << " in " << opt_.cg_max_iterations
           << " iterations (residual " << residual << ")";
        throw SolverError(os.str());
    }

    // Least-squares dipole of u phi - x_1 on the outer shell (of u phi alone
    // without the linear part).
    [[nodiscard]] double fit_dipole(const std::vector<double>& x, bool linear_part) const {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t i = 0; i < n_; ++i) {
                    const Vec3 p = centre(i, j, k);
                    const double r = p.norm();
                    if (r < 0.5 * L_ || r > L_ - 2.0 * h_) continue;
                    const double basis = p[0] / (r * r * r);
                    num += (x[op_.index(i, j, k)] * phi_.value(p) - (linear_part ? p[0] : 0.0)) * basis;
                    den += basis * basis;
                }
        return den > 0.0 ? num / den : 0.0;
    }

    Metric metric_;
    const ScalarField& phi_;
    double r0_;
    double value_;
    SolverOptions opt_;
    double L_ = 0.0, h_ = 0.0;
    std::size_t n_ = 0;
    kernels::StencilOperator op_;
    std::vector<double> rhs_data_, rhs_dipole_;
    std::vector<std::uint8_t> active_;
};

}  // namespace

// ---------------------------------------------------------------------------
// GridField evaluation

bool GridField::node_known(long i, long j, long k) const {
    const long n = static_cast<long>(d_.n);
    if (i < 0) i = -1 - i;
    if (j < 0) j = -1 - j;
    if (k < 0) k = -1 - k;
    if (i >= n || j >= n || k >= n) return false;
    return d_.active[static_cast<std::size_t>(i) + d_.n * (static_cast<std::size_t>(j) + d_.n * static_cast<std::size_t>(k))] != 0;
}

double GridField::node(long i, long j, long k) const {
    double sign = 1.0;
    if (i < 0) {
        i = -1 - i;
        sign = -1.0;
    }
    if (j < 0) j = -1 - j;
    if (k < 0) k = -1 - k;
    return sign * d_.values[static_cast<std::size_t>(i) + d_.n * (static_cast<std::size_t>(j) + d_.n * static_cast<std::size_t>(k))];
}

bool GridField::evaluable(const Vec3& x) const {
    const Vec3 a = x.cwiseAbs();
    long base[3];
    for (int c = 0; c < 3; ++c) base[c] = static_cast<long>(std::floor(a[c] / d_.h - 0.5));
    for (long di = -1; di <= 2; ++di)
        for (long dj = -1; dj <= 2; ++dj)
            for (long dk = -1; dk <= 2; ++dk)
                if (!node_known(base[0] + di, base[1] + dj, base[2] + dk)) return false;
    return true;
}

FieldSample GridField::sample(const Vec3& x) const {
    if (!evaluable(x)) {
        std::ostringstream os;
        os << "point (" << x[0] << ", " << x[1] << ", " << x[2] << ") is outside the evaluable part of the grid";
        throw DomainError(os.str());
    }
    const Vec3 s(x[0] < 0 ? -1.0 : 1.0, x[1] < 0 ? -1.0 : 1.0, x[2] < 0 ? -1.0 : 1.0);
    const Vec3 a = x.cwiseAbs();
    const double h = d_.h;
    long base[3];
    double w[3];
    for (int c = 0; c < 3; ++c) {
        const double g = a[c] / h - 0.5;
        base[c] = static_cast<long>(std::floor(g));
        w[c] = g - static_cast<double>(base[c]);
    }
    FieldSample local;
    local.grad.setZero();
    local.hess.setZero();
    for (int ci = 0; ci < 2; ++ci)
        for (int cj = 0; cj < 2; ++cj)
            for (int ck = 0; ck < 2; ++ck) {
                const double weight = (ci ? w[0] : 1 - w[0]) * (cj ? w[1] : 1 - w[1]) * (ck ? w[2] : 1 - w[2]);
                const long i = base[0] + ci, j = base[1] + cj, k = base[2] + ck;
                auto at = [&](long di, long dj, long dk) { return node(i + di, j + dj, k + dk); };
                const double u0 = at(0, 0, 0);
                Vec3 g(at(1, 0, 0) - at(-1, 0, 0), at(0, 1, 0) - at(0, -1, 0), at(0, 0, 1) - at(0, 0, -1));
                g /= 2.0 * h;
                Mat3 H;
                H(0, 0) = at(1, 0, 0) - 2 * u0 + at(-1, 0, 0);
                H(1, 1) = at(0, 1, 0) - 2 * u0 + at(0, -1, 0);
                H(2, 2) = at(0, 0, 1) - 2 * u0 + at(0, 0, -1);
                H(0, 1) = H(1, 0) = 0.25 * (at(1, 1, 0) - at(1, -1, 0) - at(-1, 1, 0) + at(-1, -1, 0));
                H(0, 2) = H(2, 0) = 0.25 * (at(1, 0, 1) - at(1, 0, -1) - at(-1, 0, 1) + at(-1, 0, -1));
                H(1, 2) = H(2, 1) = 0.25 * (at(0, 1, 1) - at(0, 1, -1) - at(0, -1, 1) + at(0, -1, -1));
                H /= h * h;
                local.u += weight * u0;
                local.grad += weight * g;
                local.hess += weight * H;
            }
    // u(x) = s_1 u~(|x|) by the octant symmetries.
    const Mat3 S = s.asDiagonal();
    FieldSample out;
    out.u = s[0] * local.u;
    out.grad = s[0] * (S * local.grad);
    out.hess = s[0] * (S * local.hess * S);
    return out;
}

// ---------------------------------------------------------------------------
// HarmonicField

Representation HarmonicField::representation() const { return impl_->representation(); }
const Metric& HarmonicField::metric() const { return impl_->metric; }
std::string HarmonicField::describe() const { return impl_->label; }
double HarmonicField::epsilon() const { return impl_->epsilon; }
double HarmonicField::tolerance() const { return impl_->tolerance; }
double HarmonicField::inner_radius() const { return impl_->boundary ? impl_->split_radius : 0.0; }
bool HarmonicField::has_boundary() const { return impl_->boundary; }
bool HarmonicField::has_fillin() const { return impl_->fillin; }
std::optional<TransmissionData> HarmonicField::transmission() const { return impl_->transmission(); }
const RadialMode* HarmonicField::separated() const { return impl_->separated(); }
const GridField* HarmonicField::grid() const { return impl_->grid(); }

Side HarmonicField::side_of(const Vec3& x) const {
    return impl_->split_radius > 0.0 && x.norm() < impl_->split_radius && !impl_->boundary ? Side::interior
                                                                                           : Side::exterior;
}

FieldSample HarmonicField::sample(const Vec3& x) const { return impl_->sample(x, side_of(x)); }
FieldSample HarmonicField::sample(const Vec3& x, Side side) const { return impl_->sample(x, side); }

FieldGeometry field_geometry(const HarmonicField& field, const Vec3& x, Side side) {
    FieldGeometry out;
    out.sample = field.sample(x, side);
    out.geometry = geometry_at(side_ambient(*field.metric(), side), x, side);
    const GeometrySample& geo = out.geometry;
    const Vec3& du = out.sample.grad;
    out.grad_vector = geo.g_inv * du;
    out.grad_norm = std::sqrt(std::max(0.0, du.dot(out.grad_vector)));
    Mat3 H = out.sample.hess;
    for (int k = 0; k < 3; ++k) H -= geo.christoffel[k] * du[k];
    out.hess = H;
    const Mat3 raised = geo.g_inv * H * geo.g_inv;
    out.hess_norm_sq = (raised.cwiseProduct(H)).sum();
    if (out.grad_norm > 0.0) {
        const Vec3 v = H * out.grad_vector / out.grad_norm;  // d_k |grad u|
        out.grad_of_grad_norm_sq = v.dot(geo.g_inv * v);
    }
    return out;
}

FieldGeometry field_geometry(const HarmonicField& field, const Vec3& x) {
    return field_geometry(field, x, field.side_of(x));
}

double laplace_residual(const HarmonicField& field, const Vec3& x, double h) {
    const Side side = field.side_of(x);
    const double step = h * std::max(1.0, x.norm());
    Mat3 H;
    for (int j = 0; j < 3; ++j) {
        const Vec3 e = step * Vec3::Unit(j);
        const Vec3 g1 = field.sample(x + e, side).grad - field.sample(x - e, side).grad;
        const Vec3 g2 = field.sample(x + 2.0 * e, side).grad - field.sample(x - 2.0 * e, side).grad;
        H.col(j) = (8.0 * g1 - g2) / (12.0 * step);
    }
    H = 0.5 * (H + H.transpose());
    const GeometrySample geo = geometry_at(side_ambient(*field.metric(), side), x, side);
    const Vec3 du = field.sample(x, side).grad;
    for (int k = 0; k < 3; ++k) H -= geo.christoffel[k] * du[k];
    return std::abs((geo.g_inv.cwiseProduct(H)).sum());
}

// ---------------------------------------------------------------------------
// Solves

namespace {

void require_radial(const MetricModel& m) {
    if (!m.is_radial())
        throw CapabilityError("separated solves need a spherically symmetric metric; " + m.describe() + " is not");
}

HarmonicField solve_grid(const Metric& metric, const InnerCondition& inner, const SolverOptions& opt) {
    conformally_flat_or_throw(metric);
    double r0 = 0.0;
    switch (inner.kind) {
        case InnerKind::transmission:
            throw CapabilityError("transmission problems are solved in the separated representation only");
        case InnerKind::neumann:
            throw CapabilityError("Neumann data is solved in the separated representation only");
        case InnerKind::dirichlet:
            r0 = inner.radius;
            if (!(r0 > metric->excluded_radius())) throw DomainError("inner sphere lies outside the chart");
            break;
        case InnerKind::none:
            if (metric->excluded_radius() > 0.0 || !metric->origin_in_chart())
                throw PreconditionError("a solve without inner boundary needs a metric regular at the origin");
            break;
    }
    GridSolver solver(metric, r0, inner.value, opt);
    auto impl = std::make_shared<GridImpl>(solver.solve());
    impl->metric = metric;
    impl->label = format_label("grid3d harmonic function", *metric);
    impl->epsilon = opt.epsilon < 0.0 ? 1e-12 : opt.epsilon;
    impl->tolerance = opt.cg_tolerance;
    impl->split_radius = r0;
    impl->boundary = r0 > 0.0;
    return HarmonicField(std::move(impl));
}

}  // namespace

HarmonicField solve_asymptotic(const Metric& metric, const InnerCondition& inner, const SolverOptions& opt) {
    if (!metric) throw ArgumentError("no metric given");
    if (opt.representation == Representation::grid3d) return solve_grid(metric, inner, opt);
    require_radial(*metric);

    const GluedMetric* glued = metric->as_glued();
    RadialMode mode;
    mode.degree = 1;

    if (inner.kind == InnerKind::transmission) {
        if (!glued) throw PreconditionError("transmission data needs a glued metric");
        const double r0 = glued->interface_radius();
        const ExteriorBasis basis = exterior_basis(glued->exterior(), r0, opt);
        const RadialProfile g = regular_interior(glued->interior(), Side::interior, r0, opt);
        const Jet gi = g.eval(r0);
        const Jet f1 = basis.growing.front(), f2 = basis.decaying.front();
        const double s_in = radial_speed(*glued->interior(), Side::interior, r0);
        const double s_ex = radial_speed(*glued->exterior(), Side::exterior, r0);
        // alpha g = f1 + beta f2 and equal fluxes.
        Mat2 M;
        M << gi.v, -f2.v, gi.d1 / s_in, -f2.d1 / s_ex;
        const Vec2 rhs(f1.v, f1.d1 / s_ex);
        const Vec2 sol = M.fullPivLu().solve(rhs);
        mode.dipole = sol[1];
        mode.interior_slope = sol[0] / glued->scale();
        mode.inner_radius = r0;
        mode.exterior = basis.profile(1.0, mode.dipole);
        std::vector<Jet> f = g.samples();
        for (Jet& j : f) j = combine(sol[0], j, 0.0, j);
        mode.interior = g.with_samples(std::move(f));
        return make_separated(std::move(mode), metric, format_label("transmission solution", *metric), opt, r0,
                              false, true);
    }

    if (inner.kind == InnerKind::none) {
        if (glued) throw PreconditionError("glued metrics take transmission data");
        if (metric->excluded_radius() > 0.0 || !metric->origin_in_chart())
            throw PreconditionError("a solve without inner boundary needs a metric regular at the origin");
        const double rj = 1.0;
        const ExteriorBasis basis = exterior_basis(metric, rj, opt);
        const RadialProfile g = regular_interior(metric, Side::exterior, rj, opt);
        const Jet gi = g.eval(rj);
        const Jet f1 = basis.growing.front(), f2 = basis.decaying.front();
        Mat2 M;
        M << gi.v, -f2.v, gi.d1, -f2.d1;
        const Vec2 sol = M.fullPivLu().solve(Vec2(f1.v, f1.d1));
        mode.dipole = sol[1];
        mode.interior_slope = sol[0];
        mode.inner_radius = rj;
        mode.exterior = basis.profile(1.0, mode.dipole);
        std::vector<Jet> f = g.samples();
        for (Jet& j : f) j = combine(sol[0], j, 0.0, j);
        mode.interior = g.with_samples(std::move(f));
        return make_separated(std::move(mode), metric, format_label("entire harmonic function", *metric), opt, rj,
                              false, false);
    }

    const double r0 = inner.radius;
    Metric ext = metric;
    if (glued) {
        if (r0 < glued->interface_radius())
            throw PreconditionError("boundary sphere must lie in the exterior part of the glued metric");
        ext = glued->exterior();
    }
    if (!(r0 > ext->excluded_radius())) throw DomainError("inner sphere lies outside the chart");
    const ExteriorBasis basis = exterior_basis(ext, r0, opt);
    const Jet f1 = basis.growing.front(), f2 = basis.decaying.front();
    if (inner.kind == InnerKind::dirichlet) {
        mode.dipole = (inner.value - f1.v) / f2.v;
    } else {
        if (f2.d1 == 0.0) throw DegeneracyError("decaying solution has zero flux on the sphere");
        mode.dipole = -f1.d1 / f2.d1;
    }
    mode.inner_radius = r0;
    mode.has_boundary = true;
    mode.exterior = basis.profile(1.0, mode.dipole);
    const std::string what = inner.kind == InnerKind::dirichlet ? "Dirichlet solution" : "Neumann solution";
    return make_separated(std::move(mode), metric, format_label(what, *metric), opt, r0, true, false);
}

namespace {

// Integral of dr / P from R to infinity, through x = 1 / r.
double green_tail_integral(const MetricModel& m, double R) {
    return numerics::integrate_gl(
        [&m](double x) {
            const RadialJets ab = m.radial_jets(1.0 / x);
            return std::sqrt(ab.A.v) / ab.B.v;
        },
        0.0, 1.0 / R, 24);
}

// G = I(r) / I(r0) with I' = -1 / P.
Jet green_jet(const MetricModel& m, double x, double integral, double I0) {
    const OdeCoefficients c = ode_coefficients(m, Side::exterior, x, 0.0);
    const double d1 = -1.0 / (c.P * I0);
    return {integral / I0, d1, -c.dP * d1 / c.P};
}

}  // namespace

HarmonicField solve_green(const Metric& metric, const SurfaceModel& sigma, const SolverOptions& opt) {
    if (!metric) throw ArgumentError("no metric given");
    if (!sigma.is_coordinate_sphere())
        throw CapabilityError("Green functions are implemented for coordinate spheres only");
    if (opt.representation == Representation::grid3d)
        throw CapabilityError("Green functions are solved in the separated representation only");
    require_radial(*metric);
    const double r0 = sigma.sphere_radius();
    Metric ext = metric;
    if (const GluedMetric* glued = metric->as_glued()) {
        if (r0 < glued->interface_radius())
            throw PreconditionError("boundary sphere must lie in the exterior part of the glued metric");
        ext = glued->exterior();
    }
    if (!(r0 > ext->excluded_radius())) throw DomainError("sphere lies outside the chart");
    if (!ext->asymptotically_flat()) throw PreconditionError(ext->describe() + " is not asymptotically flat");

    const MetricModel& m = *ext;
    const double r_max = opt.r_max_factor * r0;
    const std::vector<double> r = radial_mesh(r0, r_max, opt);
    auto inv_P = [&m](double x) { return 1.0 / ode_coefficients(m, Side::exterior, x, 0.0).P; };
    std::vector<double> I(r.size());
    I.back() = green_tail_integral(m, r_max);
    for (std::size_t k = r.size() - 1; k > 0; --k) I[k - 1] = I[k] + numerics::integrate_gl(inv_P, r[k - 1], r[k], 8);
    const double I0 = I.front();
    std::vector<Jet> G(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) G[k] = green_jet(m, r[k], I[k], I0);
    JetFn tail = [ext, I0](double x) { return green_jet(*ext, x, green_tail_integral(*ext, x), I0); };
    RadialMode mode;
    mode.degree = 0;
    mode.inner_radius = r0;
    mode.has_boundary = true;
    mode.exterior = RadialProfile(r, std::move(G), std::move(tail), radial_equation(ext, Side::exterior, 0.0));
    return make_separated(std::move(mode), metric, format_label("Green function", *metric), opt, r0, true, false);
}

double green_normal_derivative(const HarmonicField& green) {
    const RadialMode* mode = green.separated();
    if (!mode || mode->degree != 0) throw ArgumentError("not a separated Green function");
    const double r0 = mode->inner_radius;
    const MetricModel& m = side_ambient(*green.metric(), Side::exterior);
    return mode->exterior.eval(r0).d1 / radial_speed(m, Side::exterior, r0);
}

RobinSolution solve_robin_v(const Metric& metric, const HarmonicField& green, const HarmonicField& w,
                            const SolverOptions& opt) {
    const RadialMode* wm = w.separated();
    if (!wm || wm->degree != 1 || !wm->has_boundary)
        throw ArgumentError("Robin solve needs a separated Dirichlet solution w");
    const double r0 = wm->inner_radius;
    const RadialMode* gm = green.separated();
    if (!gm || gm->degree != 0 || std::abs(gm->inner_radius - r0) > 1e-12 * r0)
        throw ArgumentError("Green function and w must share the boundary sphere");
    require_radial(*metric);
    Metric ext = metric;
    if (const GluedMetric* glued = metric->as_glued()) ext = glued->exterior();
    const ExteriorBasis basis = exterior_basis(ext, r0, opt);
    const double speed = radial_speed(*ext, Side::exterior, r0);

    RobinSolution out;
    out.dG_dmu = green_normal_derivative(green);
    out.dw_dmu = wm->exterior.eval(r0).d1 / speed;
    const Jet f2 = basis.decaying.front();
    const double a = f2.v * out.dG_dmu;
    const double b = 2.0 * f2.d1 / speed;
    const double coefficient = a - b;
    if (std::abs(coefficient) <= 1e-12 * (std::abs(a) + std::abs(b)))
        throw DegeneracyError("Robin problem is degenerate: the decaying solution satisfies the homogeneous condition");
    out.coefficient = out.dw_dmu / coefficient;

    RadialMode vm;
    vm.degree = 1;
    vm.inner_radius = r0;
    vm.has_boundary = true;
    vm.growth = 0.0;
    vm.dipole = out.coefficient;
    vm.exterior = basis.profile(0.0, out.coefficient);
    out.v = make_separated(vm, metric, format_label("Robin field v", *metric), opt, r0, true, false);

    RadialMode um = vm;
    um.growth = 1.0;
    um.dipole = wm->dipole + out.coefficient;
    um.exterior = basis.profile(1.0, um.dipole);
    out.u = make_separated(std::move(um), metric, format_label("Robin-corrected field", *metric), opt, r0, true,
                           false);

    const Jet v0 = out.v.separated()->exterior.eval(r0);
    out.dv_dmu = v0.d1 / speed;
    out.robin_residual = std::abs(v0.v * out.dG_dmu - 2.0 * out.dv_dmu - out.dw_dmu);
    return out;
}

// ---------------------------------------------------------------------------
// Sampling and checks

std::uint64_t SampleStream::next() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SampleStream::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

Vec3 SampleStream::direction() {
    const double z = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * pi * uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

std::vector<FieldSamplePoint> random_field_points(const HarmonicField& field, std::size_t count, std::uint64_t seed,
                                                  double outer_factor) {
    SampleStream rng(seed);
    std::vector<FieldSamplePoint> out;
    out.reserve(count);
    if (const GridField* grid = field.grid()) {
        const auto& d = grid->data();
        const double lo = std::max(d.inner_radius, 0.05 * d.half_width) + 4.0 * d.h;
        const double hi = d.half_width - 4.0 * d.h;
        std::size_t attempts = 0;
        while (out.size() < count) {
            if (++attempts > 100 * count + 1000) throw SolverError("grid has too few evaluable points");
            const Vec3 x = (lo + (hi - lo) * rng.uniform()) * rng.direction();
            if (grid->evaluable(x)) out.push_back({x, Side::exterior});
        }
        return out;
    }
    const RadialMode* mode = field.separated();
    const double r0 = mode->inner_radius > 0.0 ? mode->inner_radius : 1.0;
    const bool inner = !mode->interior.empty();
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3 dir = rng.direction();
        if (inner && i % 3 == 2) {
            const double rho = std::max(1e-3, std::cbrt(rng.uniform()) * (1.0 - 1e-3)) * r0;
            out.push_back({rho * dir, Side::interior});
        } else {
            const double r = r0 * (1.0 + 1e-3) * std::pow(outer_factor, rng.uniform());
            out.push_back({r * dir, Side::exterior});
        }
    }
    return out;
}

KatoReport kato_check(const HarmonicField& field, const std::vector<FieldSamplePoint>& samples, double skip_below) {
    const std::size_t n = samples.size();
    std::vector<double> slack(n, 0.0), relative(n, 0.0);
    std::vector<std::uint8_t> skipped(n, 0);
    kernels::map_parallel(n, [&](std::size_t i) {
        const FieldGeometry fg = field_geometry(field, samples[i].x, samples[i].side);
        if (fg.grad_norm < skip_below) {
            skipped[i] = 1;
            return;
        }
        slack[i] = fg.hess_norm_sq - 1.5 * fg.grad_of_grad_norm_sq;
        // relative slack only where the Hessian is resolved against |grad u| / |x|
        const double scale = 1e-6 * fg.grad_norm / std::max(1.0, samples[i].x.norm());
        relative[i] = fg.hess_norm_sq > scale * scale ? slack[i] / fg.hess_norm_sq : 0.0;
    });
    KatoReport rep;
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (skipped[i]) {
            ++rep.skipped;
            continue;
        }
        ++rep.evaluated;
        if (first || slack[i] < rep.min_slack) rep.min_slack = slack[i];
        if (first || relative[i] < rep.min_relative_slack) rep.min_relative_slack = relative[i];
        first = false;
        if (std::abs(slack[i]) < 1e-8) rep.equality_points.push_back(samples[i].x);
    }
    return rep;
}

CornerProbe corner_regularity_probe(const HarmonicField& field, const TransmissionData& interface,
                                    const std::vector<double>& h_sequence, int n_nodes) {
    if (!field.has_fillin()) throw PreconditionError("corner probe needs a transmission solution");
    if (h_sequence.size() < 2) throw ArgumentError("corner probe needs at least two steps");
    const double r0 = interface.interface_radius;
    const SurfaceModel sphere = SurfaceModel::coordinate_sphere(r0);
    const double phi = 0.3;
    CornerProbe out;
    out.h = h_sequence;
    std::vector<std::vector<double>> Q(h_sequence.size());
    for (int k = 0; k < n_nodes; ++k) {
        const double theta = (k + 0.5) * pi / n_nodes;
        auto trace = [&](double t, Side side) { return field.sample(sphere.eval(t, phi).x, side).u; };
        for (std::size_t m = 0; m < h_sequence.size(); ++m) {
            const double h = h_sequence[m];
            for (Side side : {Side::exterior, Side::interior})
                Q[m].push_back((trace(theta + h, side) - 2.0 * trace(theta, side) + trace(theta - h, side)) / (h * h));
        }
        out.trace_mismatch =
            std::max(out.trace_mismatch, std::abs(trace(theta, Side::exterior) - trace(theta, Side::interior)));

        const FundamentalForms fe = fundamental_forms(sphere, *field.metric(), theta, phi, Side::exterior);
        const FundamentalForms fi = fundamental_forms(sphere, *field.metric(), theta, phi, Side::interior);
        const FieldGeometry ge = field_geometry(field, fe.point, Side::exterior);
        const FieldGeometry gi = field_geometry(field, fi.point, Side::interior);
        const double flux_e = ge.sample.grad.dot(fe.normal);
        const double flux_i = gi.sample.grad.dot(fi.normal);
        out.flux_mismatch = std::max(out.flux_mismatch, std::abs(flux_e - flux_i));
        const double second_e = fe.normal.dot(ge.hess * fe.normal);
        const double second_i = fi.normal.dot(gi.hess * fi.normal);
        const double jump = second_i - second_e;
        out.max_normal_jump = std::max(out.max_normal_jump, std::abs(jump));
        out.normal_jump_residual =
            std::max(out.normal_jump_residual, std::abs(jump - (fe.H - fi.H) * flux_e));
        if (k == 0) {
            out.H_exterior = fe.H;
            out.H_interior = fi.H;
        }
    }
    for (const auto& q : Q) {
        double mx = 0.0;
        for (double v : q) mx = std::max(mx, std::abs(v));
        out.quotient_max.push_back(mx);
    }
    for (std::size_t m = 0; m + 1 < Q.size(); ++m) {
        double mx = 0.0;
        for (std::size_t i = 0; i < Q[m].size(); ++i) mx = std::max(mx, std::abs(Q[m][i] - Q[m + 1][i]));
        out.cauchy.push_back(mx);
        out.max_cauchy = std::max(out.max_cauchy, mx);
    }
    return out;
}

namespace {

// Gauss curvature of the level set of u through x.
double level_set_curvature(const FieldGeometry& fg) {
    const GeometrySample& geo = fg.geometry;
    const Vec3 nu = fg.grad_vector / fg.grad_norm;
    auto inner = [&](const Vec3& a, const Vec3& b) { return a.dot(geo.g * b); };
    std::vector<Vec3> tangent;
    for (int c = 0; c < 3 && tangent.size() < 2; ++c) {
        Vec3 w = Vec3::Unit(c) - inner(Vec3::Unit(c), nu) * nu;
        for (const Vec3& t : tangent) w -= inner(w, t) * t;
        const double len = std::sqrt(inner(w, w));
        if (len > 1e-6) tangent.push_back(w / len);
    }
    Mat2 II;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) II(a, b) = tangent[a].dot(fg.hess * tangent[b]) / fg.grad_norm;
    const double ric_nu = nu.dot(geo.ricci * nu);
    return 0.5 * geo.scalar_curvature - ric_nu + II.determinant();
}

}  // namespace

FoliationProfile foliation_profile_check(const HarmonicField& field, const Vec3& start, double ds, int steps) {
    FoliationProfile out;
    auto velocity = [&](const Vec3& x) {
        const FieldGeometry fg = field_geometry(field, x);
        return Vec3(fg.grad_vector / (fg.grad_norm * fg.grad_norm));
    };
    Vec3 x = start;
    for (int i = 0; i <= steps; ++i) {
        try {
            const FieldGeometry fg = field_geometry(field, x);
            if (field.has_boundary() && x.norm() <= field.inner_radius()) throw DomainError("left the exterior region");
            out.s.push_back(i * ds);
            out.f.push_back(fg.grad_norm);
            out.K_level.push_back(level_set_curvature(fg));
            out.K_sigma.push_back(out.K_level.back() / fg.grad_norm);
            if (i == steps) break;
            const Vec3 k1 = velocity(x);
            const Vec3 k2 = velocity(x + 0.5 * ds * k1);
            const Vec3 k3 = velocity(x + 0.5 * ds * k2);
            const Vec3 k4 = velocity(x + ds * k3);
            x += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const Error&) {
            out.truncated = true;
            break;
        }
    }
    for (std::size_t i = 1; i + 1 < out.f.size(); ++i) {
        const double fss = (out.f[i + 1] - 2.0 * out.f[i] + out.f[i - 1]) / (ds * ds);
        out.f_ss.push_back(fss);
        out.residual.push_back(fss - 2.0 * out.K_sigma[i]);
        out.max_residual = std::max(out.max_residual, std::abs(out.residual.back()));
    }
    return out;
}

}  // namespace mass_lab
