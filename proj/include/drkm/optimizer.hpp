#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "drkm/matrix.hpp"
#include "drkm/model.hpp"

namespace drkm {

/// Quadratic-penalty schedule and the inner Adam settings.
/// Round k uses mu_k = mu0 p^k and stops its inner loop at ||grad Q|| <= tau0 / 2^k.
struct PenaltySchedule {
    double mu0 = 1.0;
    double p = 8.0;
    double tau0 = 0.1;
    std::size_t max_outer = 2;
    std::size_t max_inner = 500;
    double adam_lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
    double mu(std::size_t round) const;
    double tau(std::size_t round) const;

    friend bool operator==(const PenaltySchedule&, const PenaltySchedule&) = default;
};

/// Outer-round count used when none is configured: 2 for N <= 100, 3 below
/// 200, 4 below 400 and 7 from 400 on. Reproduces the reference settings at
/// N = 50, 100, 200, 400, 800 and never drops below 2 + ceil(log2(N/100)).
std::size_t default_max_outer(std::size_t n_points);

enum class StopReason { GradTol, MaxSteps };
std::string_view to_string(StopReason r) noexcept;

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t max_steps = 500;
    double grad_tol = 0.0;
};

struct AdamResult {
    std::size_t steps = 0;
    double grad_norm = 0.0;  ///< at the returned point
    double value = 0.0;      ///< at the returned point
    StopReason stop = StopReason::MaxSteps;
};

/// Fills `grad` at `x` and returns the function value.
using GradFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Adam with bias correction. Checks the joint L2 gradient norm before each
/// update and stops once it is <= grad_tol or after max_steps updates.
/// Throws DivergenceError (round 0) on a non-finite value or gradient.
AdamResult adam_minimize(const GradFn& fn, std::vector<double>& vars, const AdamSettings& settings);

/// Standard-normal entries from Rng(seed, layer). Throws InfeasibleConstraint
/// when N < sum of s_l.
std::vector<Matrix> init_random(const ModelConfig& config, std::size_t n_points, std::uint64_t seed);

/// H[0] rows: top-s_1 eigenvectors of the centered K0; H[l] rows: top-s_l
/// eigenvectors of the centered layer-l kernel on the columns of H[l-1].
std::vector<Matrix> init_layerwise_kpca(const ModelConfig& config, const Matrix& x);

struct RoundRecord {
    std::size_t round = 0;
    double mu = 0.0;
    double tau = 0.0;
    std::size_t steps = 0;
    StopReason stop = StopReason::MaxSteps;
    double grad_norm = 0.0;
    double objective = 0.0;
    double residual = 0.0;
    double penalty = 0.0;
    std::uint64_t start_fingerprint = 0;  ///< of the variable vector entering the round
    std::uint64_t end_fingerprint = 0;
};

struct TrainReport {
    std::vector<RoundRecord> rounds;
    bool converged = false;  ///< final round stopped on the gradient tolerance
    double wall_seconds = 0.0;
};

struct TrainResult {
    ModelState state;
    TrainReport report;
};

/// Penalty outer loop: round k minimizes Q(.; mu_k) from the previous
/// round's final point. Adam moments restart every round. Trainable layer
/// bandwidths are optimized as log(sigma2) alongside H.
TrainResult train(ModelState state, const PenaltySchedule& schedule);

std::uint64_t fingerprint(std::span<const double> values);

}  // namespace drkm
