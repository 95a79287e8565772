#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drkm/encoder.hpp"
#include "drkm/kernels.hpp"
#include "drkm/optimizer.hpp"

namespace drkm {

/// Point clouds: square, half_circle, spiral, ring, composite_a (square and
/// spiral), composite_b (two squares, spiral, ring). factor_toy is the
/// discrete-factor dataset used for the disentanglement metrics.
struct DatasetConfig {
    std::string kind = "square";
    std::size_t n_train = 1000;
    std::size_t n_validation = 250;
    double noise = 0.1;
    std::vector<std::size_t> cardinalities{3, 4, 5};
    std::size_t embedding_dim = 10;

    bool is_factor_toy() const noexcept { return kind == "factor_toy"; }
};

/// A layer as configured: an absent sigma2 means the median heuristic, i.e.
/// median_factor times the median squared distance between the layer inputs.
struct LayerSpec {
    std::size_t s = 1;
    double eta = 1.0;
    double lambda = 1.0;
    KernelFamily family = KernelFamily::Rbf;
    std::optional<double> sigma2;
    double median_factor = 1.0;
    bool trainable = false;
};

enum class InitMode { LayerwiseKpca, Random };
std::string_view to_string(InitMode m) noexcept;

/// Validation-based choice of the layer-1 bandwidth.
struct BandwidthSelection {
    bool enabled = true;
    std::vector<double> grid{3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
};

struct DenoiseConfig {
    std::string component_mask;  ///< empty: the s_1 leading layer-1 components
    std::size_t kpca_components = 3;
    bool baseline = false;
    PreimageSettings preimage;
};

struct MetricConfig {
    std::size_t bins = 20;
    double sap_train_fraction = 0.8;
    std::size_t n_eval = 4000;
    std::size_t latent_dim = 0;  ///< 0: no check
    std::size_t latent_layer = 0;  ///< 0: concatenate every layer, else the 1-based layer
};

/// Value grids of the sweep; an empty grid keeps the base config value.
/// gamma sets eta = gamma, lambda = 1 on every layer; seeds replace the
/// initialization seed; n_layers keeps the first layers of the stack.
struct SweepConfig {
    std::vector<double> gamma;
    std::vector<std::size_t> n_train;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> n_layers;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    /// Seed of the random initialization; absent: derived from `seed`. The
    /// sweep varies only this seed so data and splits stay fixed.
    std::optional<std::uint64_t> init_seed;
    DatasetConfig dataset;
    std::vector<LayerSpec> layers{LayerSpec{2, 1.0, 1.0, KernelFamily::Rbf, 0.1, 1.0, false},
                                  LayerSpec{1, 1.0, 1.0, KernelFamily::Rbf, std::nullopt, 1.0, false}};
    PenaltySchedule schedule;
    bool auto_max_outer = true;  ///< max_outer from default_max_outer(n_train)
    InitMode init = InitMode::LayerwiseKpca;
    bool train = true;  ///< false: keep the initial H
    BandwidthSelection bandwidth;
    DenoiseConfig denoise;
    MetricConfig metrics;
    SweepConfig sweep;

    void validate() const;
    /// Schedule with max_outer resolved for the configured training size.
    PenaltySchedule resolved_schedule() const;
};

/// Throws ConfigError on malformed input, unknown keys or invalid values.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every field present and keys sorted.
std::string canonical_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace drkm
