#include "mass_lab/kernels.hpp"

#include <omp.h>

namespace mass_lab::kernels {

void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

namespace {

inline double stencil_row(const StencilOperator& op, std::span<const double> x, std::size_t i, std::size_t j,
                          std::size_t k) {
    const std::size_t c = op.index(i, j, k);
    double acc = op.diag[c] * x[c];
    if (i + 1 < op.nx) acc -= op.cx[c] * x[c + 1];
    if (i > 0) acc -= op.cx[c - 1] * x[c - 1];
    const std::size_t sy = op.nx;
    if (j + 1 < op.ny) acc -= op.cy[c] * x[c + sy];
    if (j > 0) acc -= op.cy[c - sy] * x[c - sy];
    const std::size_t sz = op.nx * op.ny;
    if (k + 1 < op.nz) acc -= op.cz[c] * x[c + sz];
    if (k > 0) acc -= op.cz[c - sz] * x[c - sz];
    return acc;
}

}  // namespace

void apply_serial(const StencilOperator& op, std::span<const double> x, std::span<double> y) {
    for (std::size_t k = 0; k < op.nz; ++k)
        for (std::size_t j = 0; j < op.ny; ++j)
            for (std::size_t i = 0; i < op.nx; ++i) y[op.index(i, j, k)] = stencil_row(op, x, i, j, k);
}

void apply_parallel(const StencilOperator& op, std::span<const double> x, std::span<double> y) {
    const auto planes = static_cast<std::ptrdiff_t>(op.nz * op.ny);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < planes; ++p) {
        const auto k = static_cast<std::size_t>(p) / op.ny;
        const auto j = static_cast<std::size_t>(p) % op.ny;
        for (std::size_t i = 0; i < op.nx; ++i) y[op.index(i, j, k)] = stencil_row(op, x, i, j, k);
    }
}

double dot_serial(std::span<const double> a, std::span<const double> b) {
    return sum_serial(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double dot_parallel(std::span<const double> a, std::span<const double> b) {
    return sum_parallel(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace mass_lab::kernels
