#pragma once

// Data-parallel inner loops used by kernel assembly, the objective/gradient
// sweep and the pre-image iteration. Every kernel has a portable scalar
// reference and, on x86-64, an AVX2+FMA variant; the variant is chosen once
// at startup from CPUID and can be overridden with DRKM_SIMD=scalar|avx2 or
// select_backend().

#include <cstddef>
#include <string_view>

namespace drkm::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = a .* b
    void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
    // out += (col - c)^2
    void (*accumulate_sq_diff)(const double* col, double c, double* out, std::size_t n);
    // out = exp(scale * in); in and out may alias
    void (*exp_scaled)(const double* in, double scale, double* out, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels() noexcept;

bool cpu_supports_avx2() noexcept;

/// Kernels currently in use.
const KernelTable& kernels() noexcept;
Backend active_backend() noexcept;
/// Switch backends; returns false (and changes nothing) if unsupported here.
bool select_backend(Backend b) noexcept;
std::string_view backend_name(Backend b) noexcept;

inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline double sum(const double* a, std::size_t n) { return kernels().sum(a, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    kernels().axpy(alpha, x, y, n);
}
inline void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    kernels().hadamard(a, b, out, n);
}
inline void accumulate_sq_diff(const double* col, double c, double* out, std::size_t n) {
    kernels().accumulate_sq_diff(col, c, out, n);
}
inline void exp_scaled(const double* in, double scale, double* out, std::size_t n) {
    kernels().exp_scaled(in, scale, out, n);
}

}  // namespace drkm::simd
