#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "drkm/config.hpp"
#include "drkm/datasets.hpp"
#include "drkm/encoder.hpp"
#include "drkm/metrics.hpp"
#include "drkm/optimizer.hpp"

namespace drkm {

/// Independent seeds of one experiment, all derived from the config seed.
struct SeedPlan {
    std::uint64_t train = 0;
    std::uint64_t train_noise = 0;
    std::uint64_t validation = 0;
    std::uint64_t validation_noise = 0;
    std::uint64_t init = 0;
    std::uint64_t eval = 0;
    std::uint64_t sap = 0;

    static SeedPlan from(std::uint64_t seed);
};

struct PointSplits {
    Matrix train_clean;
    Matrix train_noisy;
    Matrix validation_clean;
    Matrix validation_noisy;
};

ShapeSpec shape_spec(const DatasetConfig& d, std::size_t n_points, std::uint64_t seed);
PointSplits make_point_splits(const ExperimentConfig& cfg);
/// Training samples of the factor dataset (full grid when n_train is 0).
FactorDataset make_factor_train(const ExperimentConfig& cfg);
/// Evaluation subset: min(n_eval, N) samples of the training set drawn with
/// the evaluation seed.
FactorDataset make_factor_eval(const ExperimentConfig& cfg);

/// Median of the squared distances over all pairs of rows.
double median_sq_distance(const Matrix& points);

/// Concrete model config for training data x: median-heuristic bandwidths
/// are resolved from the layer-wise KPCA codes of the preceding layer. A
/// given layer1_sigma2 replaces the configured layer-1 bandwidth.
ModelConfig resolve_model(const ExperimentConfig& cfg, const Matrix& x,
                          std::optional<double> layer1_sigma2 = std::nullopt);
std::vector<Matrix> initial_hidden(const ExperimentConfig& cfg, const ModelConfig& model, const Matrix& x);
/// Initializes and (if configured) trains on x.
TrainResult fit_model(const ExperimentConfig& cfg, const Matrix& x, std::optional<double> layer1_sigma2 = std::nullopt);

/// The denoising mask: the override if given, else the config mask, else
/// the s_1 leading layer-1 components.
std::vector<ComponentRef> resolve_mask(const ExperimentConfig& cfg, const std::string& override_mask = "");

struct DenoiseBatch {
    Matrix points;
    std::size_t collapsed = 0;  ///< points left at their input after PreimageCollapse
    std::size_t not_converged = 0;
    std::size_t iterations = 0;
};

DenoiseBatch denoise_points(const TrainedModel& model, const Matrix& noisy, const std::vector<ComponentRef>& mask,
                            const PreimageSettings& settings);
DenoiseBatch kpca_denoise_points(const KpcaModel& model, const Matrix& noisy, const PreimageSettings& settings);

struct SelectionRow {
    double sigma2 = 0.0;
    double validation_error = 0.0;
    std::string status;  ///< "ok" or the failure message
};

struct DrkmSelection {
    TrainResult result;
    double sigma2 = 0.0;
    std::vector<SelectionRow> rows;
};

/// Trains one model per layer-1 bandwidth of the grid and keeps the one
/// with the lowest validation reconstruction error under `mask`. Without
/// selection the configured bandwidth is trained directly.
DrkmSelection select_and_train(const ExperimentConfig& cfg, const PointSplits& splits,
                               const std::vector<ComponentRef>& mask);

struct KpcaSelection {
    KpcaModel model;
    double sigma2 = 0.0;
    std::vector<SelectionRow> rows;
};

/// Kernel PCA baseline with its bandwidth chosen on the validation split
/// over the same grid.
KpcaSelection select_kpca(const ExperimentConfig& cfg, const PointSplits& splits);

struct DenoiseRun {
    double drkm_error = 0.0;
    double noisy_error = 0.0;
    double kpca_error = std::numeric_limits<double>::quiet_NaN();
    double drkm_sigma2 = 0.0;
    double kpca_sigma2 = std::numeric_limits<double>::quiet_NaN();
    DenoiseBatch drkm;
    DenoiseBatch kpca;
    std::vector<SelectionRow> kpca_rows;
};

/// Denoises the noisy training points with a trained model and, when the
/// baseline is on, with the validation-selected kernel PCA model.
DenoiseRun denoise_training_set(const ExperimentConfig& cfg, const PointSplits& splits, const TrainedModel& model,
                                const std::vector<ComponentRef>& mask);

/// Latent codes used by the metrics: every layer concatenated, or one layer.
Matrix latent_codes(const TrainedModel& model, const Matrix& x, std::size_t latent_layer);

struct MetricsOutcome {
    MetricReport report;
    std::size_t latent_dim = 0;
};

/// Fits on the factor dataset and scores the evaluation codes. Throws
/// ConfigError when the latent dimension differs from metrics.latent_dim.
MetricsOutcome run_metrics(const ExperimentConfig& cfg);

/// Model file: JSON with config hash, seed, layer configs, training data
/// and H, written with round-trip exact numbers.
void save_model(const std::filesystem::path& path, const ModelState& state, const std::vector<std::string>& meta);
ModelState load_model(const std::filesystem::path& path);

}  // namespace drkm
