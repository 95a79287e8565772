#include "drkm/simd.hpp"

#include <cmath>

namespace drkm::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void accumulate_sq_diff_scalar(const double* col, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = col[i] - c;
        out[i] += d * d;
    }
}

void exp_scaled_scalar(const double* in, double scale, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(scale * in[i]);
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static constexpr KernelTable table{dot_scalar,      sum_scalar,
                                       axpy_scalar,     hadamard_scalar,
                                       accumulate_sq_diff_scalar, exp_scaled_scalar};
    return table;
}

}  // namespace drkm::simd
