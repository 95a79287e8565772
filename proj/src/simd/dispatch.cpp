#include "drkm/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace drkm::simd {

bool cpu_supports_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend detect_initial() noexcept {
    const bool avx2_ok = avx2_kernels() != nullptr && cpu_supports_avx2();
    if (const char* env = std::getenv("DRKM_SIMD")) {
        const std::string_view v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && avx2_ok) return Backend::Avx2;
    }
    return avx2_ok ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() noexcept {
    static std::atomic<Backend> backend{detect_initial()};
    return backend;
}

}  // namespace

const KernelTable& kernels() noexcept {
    return current().load(std::memory_order_relaxed) == Backend::Avx2 ? *avx2_kernels()
                                                                       : scalar_kernels();
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

bool select_backend(Backend b) noexcept {
    if (b == Backend::Avx2 && (avx2_kernels() == nullptr || !cpu_supports_avx2())) return false;
    current().store(b, std::memory_order_relaxed);
    return true;
}

std::string_view backend_name(Backend b) noexcept {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace drkm::simd
