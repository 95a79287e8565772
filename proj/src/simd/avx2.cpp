// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include "drkm/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace drkm::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void accumulate_sq_diff_avx2(const double* col, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(col + i), vc);
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) {
        const double d = col[i] - c;
        out[i] += d * d;
    }
}

// Cephes-style exp: x = n*ln2 + r, |r| <= ln2/2, exp(r) from a (2,3) Pade
// form, then 2^n applied through the exponent field in two halves so that
// n = 1024 near the overflow edge stays representable.
constexpr double kMaxLog = 7.09782712893383996843e2;
constexpr double kMinLog = -7.08396418532264106224e2;

inline __m256d pow2_int(__m256d n) {
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
    const __m256i bits = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                          _mm256_castpd_si256(magic));
    const __m256i biased = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
    return _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
}

inline __m256d exp_pd(__m256d x) {
    const __m256d nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    const __m256d input = x;
    const __m256d below = _mm256_cmp_pd(x, _mm256_set1_pd(kMinLog), _CMP_LT_OQ);
    const __m256d above = _mm256_cmp_pd(x, _mm256_set1_pd(kMaxLog), _CMP_GT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(kMinLog)), _mm256_set1_pd(kMaxLog));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009e0));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
    const __m256d n2 = _mm256_sub_pd(n, n1);
    e = _mm256_mul_pd(_mm256_mul_pd(e, pow2_int(n1)), pow2_int(n2));

    e = _mm256_andnot_pd(below, e);
    e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), above);
    return _mm256_blendv_pd(e, input, nan);
}

void exp_scaled_avx2(const double* in, double scale, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, exp_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(in + i))));
    }
    if (i < n) {
        alignas(32) double tmp[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = i; k < n; ++k) tmp[k - i] = scale * in[k];
        _mm256_store_pd(tmp, exp_pd(_mm256_load_pd(tmp)));
        for (std::size_t k = i; k < n; ++k) out[k] = tmp[k - i];
    }
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static constexpr KernelTable table{dot_avx2,      sum_avx2,
                                       axpy_avx2,     hadamard_avx2,
                                       accumulate_sq_diff_avx2, exp_scaled_avx2};
    return &table;
}

}  // namespace drkm::simd

#else

namespace drkm::simd {
const KernelTable* avx2_kernels() noexcept { return nullptr; }
}  // namespace drkm::simd

#endif
