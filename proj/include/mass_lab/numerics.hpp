#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <span>
#include <vector>

namespace mass_lab::numerics {

// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached; safe to call from multiple threads.
const QuadratureRule& gauss_legendre(int n);

// Nodes and weights mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n);

// Adaptive Gauss-Kronrod (15 point) with relative tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12, double* error = nullptr);

// Same rule with an absolute error target, for integrals that may cancel to zero.
double integrate_adaptive_abs(const std::function<double(double)>& f, double a, double b, double abs_tol,
                              int max_depth = 12);

struct RichardsonResult {
    double estimate = 0.0;
    double error = 0.0;          // |last two diagonal entries|
    std::vector<std::vector<double>> table;
    bool monotone = true;        // input sequence was monotone
};

// Values on a geometric sequence of step sizes h_k = h_0 / ratio^k. The error
// expansion is assumed to hold powers first_order, first_order + 1, ...
RichardsonResult richardson(std::span<const double> values, double ratio, int first_order);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

// Cubic spline with prescribed end slopes.
class ClampedSpline {
public:
    ClampedSpline() = default;
    ClampedSpline(std::vector<double> x, std::vector<double> y, double slope_left, double slope_right);

    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;
    [[nodiscard]] double second_derivative(double t) const;
    [[nodiscard]] double front() const { return x_.front(); }
    [[nodiscard]] double back() const { return x_.back(); }

private:
    [[nodiscard]] std::size_t interval(double t) const;
    std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

// Quintic Hermite data on a node sequence: value, first and second derivative.
struct HermiteSample {
    double v, d1, d2;
};

// Interpolates value, first and second derivative inside [x0, x1].
HermiteSample quintic_hermite(double x0, const HermiteSample& a, double x1, const HermiteSample& b, double x);

// Root of f on [lo, hi]; requires a sign change.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-15);

// Levenshtein distance, used for "did you mean" suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace mass_lab::numerics
