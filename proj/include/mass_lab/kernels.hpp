#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

// Hot loops with an OpenMP implementation and a serial reference. Reductions
// use a fixed block decomposition so results do not depend on thread count.
namespace mass_lab::kernels {

inline constexpr std::size_t reduction_block = 256;

void set_thread_count(int threads);
int thread_count();

// Seven-point operator on a cell-centred box of nx * ny * nz cells, stored
// x-fastest. Face coefficients couple cell i to its +x, +y, +z neighbours.
struct StencilOperator {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> diag;
    std::vector<double> cx, cy, cz;  // zero where the neighbour is absent
    [[nodiscard]] std::size_t size() const { return nx * ny * nz; }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + nx * (j + ny * k);
    }
};

// y = A x with A = diag - off-diagonal couplings.
void apply_serial(const StencilOperator& op, std::span<const double> x, std::span<double> y);
void apply_parallel(const StencilOperator& op, std::span<const double> x, std::span<double> y);

double dot_serial(std::span<const double> a, std::span<const double> b);
double dot_parallel(std::span<const double> a, std::span<const double> b);

// Exceptions cannot cross an OpenMP region; the first one is kept and
// rethrown on the calling thread.
class ExceptionSlot {
public:
    template <class F>
    void run(F&& body) {
        if (failed_.load(std::memory_order_relaxed)) return;
        try {
            body();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
            failed_ = true;
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::atomic<bool> failed_{false};
    std::mutex mutex_;
    std::exception_ptr error_;
};

// Sum of f(i) for i in [0, n), blocked for determinism.
template <class F>
double sum_serial(std::size_t n, F&& f) {
    const std::size_t blocks = (n + reduction_block - 1) / reduction_block;
    double total = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        double part = 0.0;
        const std::size_t end = std::min(n, (b + 1) * reduction_block);
        for (std::size_t i = b * reduction_block; i < end; ++i) part += f(i);
        total += part;
    }
    return total;
}

template <class F>
double sum_parallel(std::size_t n, F&& f) {
    const std::size_t blocks = (n + reduction_block - 1) / reduction_block;
    std::vector<double> partial(blocks, 0.0);
    ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        slot.run([&] {
            double part = 0.0;
            const std::size_t begin = static_cast<std::size_t>(b) * reduction_block;
            const std::size_t end = std::min(n, begin + reduction_block);
            for (std::size_t i = begin; i < end; ++i) part += f(i);
            partial[static_cast<std::size_t>(b)] = part;
        });
    }
    slot.rethrow();
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// Evaluates f(i) into out[i] in parallel.
template <class F>
void map_parallel(std::size_t n, F&& f) {
    ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        slot.run([&] { f(static_cast<std::size_t>(i)); });
    slot.rethrow();
}

}  // namespace mass_lab::kernels
