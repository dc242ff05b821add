#include "mass_lab/errors.hpp"
#include "mass_lab/kernels.hpp"
#include "mass_lab/numerics.hpp"
#include "mass_lab/types.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace mass_lab;
using namespace mass_lab::numerics;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 16, 64}) {
        const int degree = 2 * n - 1;
        const double value = integrate_gl([&](double x) { return std::pow(x, degree - (degree % 2)); }, -1.0, 1.0, n);
        const int p = degree - (degree % 2);
        CHECK(value == doctest::Approx(2.0 / (p + 1)).epsilon(1e-13));
    }
    const auto& rule = gauss_legendre(7);
    double total = 0.0;
    for (double w : rule.weights) total += w;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("adaptive quadrature handles a smooth integrand to tight tolerance") {
    const double v = integrate_adaptive([](double x) { return std::exp(-x * x); }, 0.0, 3.0, 1e-13);
    CHECK(v == doctest::Approx(0.5 * std::sqrt(pi) * std::erf(3.0)).epsilon(1e-13));
}

TEST_CASE("Richardson removes successive powers") {
    std::vector<double> values;
    for (int k = 0; k < 4; ++k) {
        const double h = 0.1 / std::pow(2.0, k);
        values.push_back(3.0 + 2.0 * h + 5.0 * h * h - 7.0 * h * h * h);
    }
    const RichardsonResult r = richardson(values, 2.0, 1);
    CHECK(r.estimate == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(r.monotone);
    const std::vector<double> wiggle{1.0, 2.0, 1.5, 1.7};
    CHECK_FALSE(richardson(wiggle, 2.0, 1).monotone);
}

TEST_CASE("line fit recovers slope") {
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const LineFit f = least_squares_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
}

TEST_CASE("clamped spline reproduces cubics") {
    auto f = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x; };
    auto df = [](double x) { return -2.0 + 1.5 * x * x; };
    std::vector<double> xs{0.0, 0.3, 0.7, 1.2, 2.0}, ys;
    for (double x : xs) ys.push_back(f(x));
    const ClampedSpline s(xs, ys, df(0.0), df(2.0));
    for (double t : {0.1, 0.5, 1.0, 1.9}) {
        CHECK(s.value(t) == doctest::Approx(f(t)).epsilon(1e-13));
        CHECK(s.derivative(t) == doctest::Approx(df(t)).epsilon(1e-12));
        CHECK(s.second_derivative(t) == doctest::Approx(3.0 * t).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ClampedSpline({0.0, 0.0}, {1.0, 1.0}, 0.0, 0.0), ArgumentError);
}

TEST_CASE("quintic Hermite is exact for quintics") {
    auto f = [](double x) { return HermiteSample{x * x * x * x * x - x * x, 5 * x * x * x * x - 2 * x, 20 * x * x * x - 2}; };
    for (double x : {0.3, 0.55, 0.9}) {
        const HermiteSample s = quintic_hermite(0.25, f(0.25), 1.0, f(1.0), x);
        CHECK(s.v == doctest::Approx(f(x).v).epsilon(1e-13));
        CHECK(s.d1 == doctest::Approx(f(x).d1).epsilon(1e-12));
        CHECK(s.d2 == doctest::Approx(f(x).d2).epsilon(1e-11));
    }
}

TEST_CASE("root finder and edit distance") {
    CHECK(find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(find_root([](double x) { return x * x + 1.0; }, 0.0, 2.0), SolverError);
    CHECK(edit_distance("schwarzschield", "schwarzschild") == 1);
    CHECK(edit_distance("", "abc") == 3);
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
    kernels::StencilOperator op;
    op.nx = 13;
    op.ny = 11;
    op.nz = 9;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    const std::size_t n = op.size();
    op.diag.resize(n);
    op.cx.resize(n);
    op.cy.resize(n);
    op.cz.resize(n);
    std::vector<double> x(n), y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
        op.diag[i] = 7.0 + u(rng);
        op.cx[i] = u(rng);
        op.cy[i] = u(rng);
        op.cz[i] = u(rng);
        x[i] = u(rng) - 0.5;
    }
    kernels::apply_serial(op, x, y1);
    for (int threads : {1, 2, 4}) {
        kernels::set_thread_count(threads);
        kernels::apply_parallel(op, x, y2);
        CHECK(y1 == y2);
        CHECK(kernels::dot_serial(x, y1) == kernels::dot_parallel(x, y1));
    }
    // Symmetry of the operator: <Ax, z> == <x, Az>.
    std::vector<double> z(n), az(n);
    for (auto& v : z) v = u(rng);
    kernels::apply_serial(op, z, az);
    CHECK(kernels::dot_serial(y1, z) == doctest::Approx(kernels::dot_serial(x, az)).epsilon(1e-13));
}

TEST_CASE("parallel regions rethrow the first exception") {
    CHECK_THROWS_AS(kernels::sum_parallel(1000,
                                          [](std::size_t i) -> double {
                                              if (i == 517) throw DomainError("boom");
                                              return 1.0;
                                          }),
                    DomainError);
}
