#pragma once

#include <cstdint>
#include <random>

namespace drkm {

/// Portable seeded generator: bit-identical streams on every conforming
/// platform. std::mt19937_64 is fully specified by the standard; the
/// distributions are not, so uniform and normal draws are done here.
///
/// Stream "drkm-rng-v1": engine seeded with splitmix64(seed ^ splitmix64(stream)).
class Rng {
public:
    static constexpr const char* kName = "drkm-rng-v1";

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via the Marsaglia polar method.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace drkm
