#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drkm/config.hpp"

namespace drkm {

struct CommandOptions {
    ExperimentConfig config;
    std::filesystem::path out = "out";
    std::filesystem::path model;  ///< empty: <out>/model.json
    std::optional<std::string> component_mask;  ///< overrides denoise.component_mask
    bool baseline = false;        ///< adds the kernel PCA ratio (or denoise.baseline)
};

/// Writes clean and noisy train/validation CSVs (or the factor dataset) and
/// manifest.json.
void cmd_generate(const CommandOptions& opts);
/// Writes model.json, train_report.csv and, for point clouds with bandwidth
/// selection, bandwidth_selection.csv.
void cmd_train(const CommandOptions& opts);
/// Writes denoised.csv, denoise_summary.csv and denoise.svg; with the
/// baseline also kpca_denoised.csv and kpca_selection.csv.
void cmd_denoise(const CommandOptions& opts);
/// Writes metrics.csv and metrics.txt.
void cmd_metrics(const CommandOptions& opts);
/// Writes cells/cell_NNNN.csv, sweep.csv (long format) and sweep_summary.csv.
void cmd_sweep(const CommandOptions& opts);

/// Sweep worker count: DRKM_THREADS when set to a positive integer, else the
/// hardware concurrency, never more than `cells` and never below 1.
std::size_t worker_count(std::size_t cells);

/// 2 config/argument errors, 3 divergence, 4 I/O and parse errors, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

/// "# " metadata lines shared by every artifact of a run.
std::vector<std::string> run_meta(const ExperimentConfig& cfg, const std::string& command);

}  // namespace drkm
