#include "mass_lab/numerics.hpp"

#include "mass_lab/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace mass_lab::numerics {

namespace {

QuadratureRule build_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
    if (n < 1) throw ArgumentError("Gauss-Legendre rule needs at least one node");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
    return it->second;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
    QuadratureRule rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
    const QuadratureRule& rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double* error) {
    double err = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, rel_tol, &err);
    if (error) *error = err;
    return value;
}

double integrate_adaptive_abs(const std::function<double(double)>& f, double a, double b, double abs_tol,
                              int max_depth) {
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err);
    if (err <= abs_tol || max_depth <= 0) return value;
    const double mid = 0.5 * (a + b);
    return integrate_adaptive_abs(f, a, mid, 0.5 * abs_tol, max_depth - 1) +
           integrate_adaptive_abs(f, mid, b, 0.5 * abs_tol, max_depth - 1);
}

RichardsonResult richardson(std::span<const double> values, double ratio, int first_order) {
    RichardsonResult out;
    if (values.empty()) throw ArgumentError("Richardson extrapolation needs at least one value");
    const std::size_t n = values.size();
    out.table.assign(n, {});
    for (std::size_t k = 0; k < n; ++k) {
        out.table[k].push_back(values[k]);
        for (std::size_t j = 1; j <= k; ++j) {
            const double factor = std::pow(ratio, first_order + static_cast<int>(j) - 1) - 1.0;
            const double prev = out.table[k][j - 1];
            out.table[k].push_back(prev + (prev - out.table[k - 1][j - 1]) / factor);
        }
    }
    out.estimate = out.table[n - 1][n - 1];
    out.error = n > 1 ? std::abs(out.table[n - 1][n - 1] - out.table[n - 2][n - 2]) : 0.0;
    if (n > 2) {
        bool up = true, down = true;
        for (std::size_t k = 1; k < n; ++k) {
            up = up && values[k] >= values[k - 1];
            down = down && values[k] <= values[k - 1];
        }
        out.monotone = up || down;
    }
    return out;
}

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw DegeneracyError("line fit abscissae are all equal");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.max_residual = std::max(fit.max_residual, std::abs(y[i] - fit.intercept - fit.slope * x[i]));
    return fit;
}

ClampedSpline::ClampedSpline(std::vector<double> x, std::vector<double> y, double slope_left,
                             double slope_right)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ArgumentError("spline needs matching abscissae and values (n >= 2)");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw ArgumentError("spline abscissae must be strictly increasing");
    // Tridiagonal system for the knot second derivatives.
    std::vector<double> a(n), b(n), c(n), d(n);
    const double h0 = x_[1] - x_[0];
    b[0] = h0 / 3.0;
    c[0] = h0 / 6.0;
    d[0] = (y_[1] - y_[0]) / h0 - slope_left;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x_[i] - x_[i - 1];
        const double hr = x_[i + 1] - x_[i];
        a[i] = hl / 6.0;
        b[i] = (hl + hr) / 3.0;
        c[i] = hr / 6.0;
        d[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
    }
    const double hn = x_[n - 1] - x_[n - 2];
    a[n - 1] = hn / 6.0;
    b[n - 1] = hn / 3.0;
    d[n - 1] = slope_right - (y_[n - 1] - y_[n - 2]) / hn;
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    m_.assign(n, 0.0);
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

std::size_t ClampedSpline::interval(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
}

double ClampedSpline::value(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h;
    const double B = (t - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double ClampedSpline::derivative(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h;
    const double B = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h - (3 * A * A - 1) * h * m_[i] / 6.0 + (3 * B * B - 1) * h * m_[i + 1] / 6.0;
}

double ClampedSpline::second_derivative(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h;
    const double B = (t - x_[i]) / h;
    return A * m_[i] + B * m_[i + 1];
}

HermiteSample quintic_hermite(double x0, const HermiteSample& a, double x1, const HermiteSample& b, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    // Basis functions and their first two derivatives in t.
    const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double H3 = 0.5 * (t3 - 2 * t4 + t5);
    const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double H5 = 10 * t3 - 15 * t4 + 6 * t5;
    const double dH0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double dH1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double dH2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double dH3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    const double dH4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double dH5 = 30 * t2 - 60 * t3 + 30 * t4;
    const double ddH0 = -60 * t + 180 * t2 - 120 * t3;
    const double ddH1 = -36 * t + 96 * t2 - 60 * t3;
    const double ddH2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
    const double ddH3 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
    const double ddH4 = -24 * t + 84 * t2 - 60 * t3;
    const double ddH5 = 60 * t - 180 * t2 + 120 * t3;
    const double a1 = a.d1 * h, a2 = a.d2 * h * h, b1 = b.d1 * h, b2 = b.d2 * h * h;
    HermiteSample s;
    s.v = H0 * a.v + H1 * a1 + H2 * a2 + H3 * b2 + H4 * b1 + H5 * b.v;
    s.d1 = (dH0 * a.v + dH1 * a1 + dH2 * a2 + dH3 * b2 + dH4 * b1 + dH5 * b.v) / h;
    s.d2 = (ddH0 * a.v + ddH1 * a1 + ddH2 * a2 + ddH3 * b2 + ddH4 * b1 + ddH5 * b.v) / (h * h);
    return s;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw SolverError("root bracket has no sign change");
    std::uintmax_t max_iter = 200;
    auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, max_iter);
    return 0.5 * (a + b);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace mass_lab::numerics
