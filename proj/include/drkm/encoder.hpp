#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drkm/kernels.hpp"
#include "drkm/matrix.hpp"
#include "drkm/model.hpp"

namespace drkm {

/// Column means and grand mean of a training kernel matrix, used to apply
/// the feature-space centering to out-of-sample kernel vectors.
struct CenteringStats {
    std::vector<double> column_means;
    double grand_mean = 0.0;

    static CenteringStats of(const Matrix& k);
    /// Centers k(x_i, x) for i = 1..N in place.
    void center(std::span<double> kvec) const;
};

/// Read-only trained model with per-layer centering statistics.
class TrainedModel {
public:
    explicit TrainedModel(ModelState state);

    const ModelState& state() const noexcept { return state_; }
    const ModelConfig& config() const noexcept { return state_.config(); }
    const CenteringStats& centering(std::size_t layer) const { return centering_.at(layer); }

private:
    ModelState state_;
    std::vector<CenteringStats> centering_;
};

/// h1* = 1/(lambda_1 eta_1) H1 k0(X, x*); h_l* = 1/(lambda_l eta_l) H_l k_{l-1}(H_{l-1} cols, h_{l-1}*).
std::vector<std::vector<double>> encode(const TrainedModel& model, std::span<const double> x_star);
/// Encodes every row and concatenates the per-layer codes (N x sum s_l).
Matrix encode_concatenated(const TrainedModel& model, const Matrix& x);

struct PreimageSettings {
    std::size_t max_iters = 10000;
    double tol = 1e-8;
    bool restart_on_collapse = false;
    std::size_t max_restarts = 10;
    double restart_scale = 0.05;  ///< std of the start perturbation on restart
    std::uint64_t restart_seed = 0;
    /// Project with the centered kernel and add the mean-map coefficients to
    /// the pre-image weights. Off: the raw iteration formula.
    bool centered = false;

    void validate() const;
};

struct PreimageResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    bool converged = false;
};

/// Fixed-point pre-image for an RBF kernel: rows of `alpha` (K x N) are the
/// expansion coefficients of the kept directions over the training points.
/// Each step recomputes z_k = alpha_k . k(X, x_t), beta = alpha^T z and
/// x_{t+1} = sum_i beta_i k_i x_i / sum_i beta_i k_i, starting at x_star.
/// Throws PreimageCollapse when |sum_i beta_i k_i| < 1e-300 (after the
/// configured restarts).
PreimageResult preimage(const Matrix& x_train, const KernelSpec& kernel, const Matrix& alpha,
                        std::span<const double> x_star, const PreimageSettings& settings,
                        const CenteringStats* centering = nullptr);

/// Component c (0-based) of layer l (0-based) of the hidden stack.
struct ComponentRef {
    std::size_t layer = 0;
    std::size_t component = 0;
    friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
};

/// Parses "1:1,1:2,2:1" (1-based layer:component); an empty list is an error.
std::vector<ComponentRef> parse_component_mask(const std::string& text);
std::string format_component_mask(const std::vector<ComponentRef>& mask);
/// The first s_keep components of layer 1.
std::vector<ComponentRef> leading_components(std::size_t s_keep);

/// Denoises with the layer-1 expansion restricted to the masked components;
/// a component of a deeper layer contributes its H row as expansion
/// coefficients over phi_1(x_i).
PreimageResult drkm_denoise(const TrainedModel& model, std::span<const double> x_star,
                            const std::vector<ComponentRef>& mask, const PreimageSettings& settings);
PreimageResult drkm_denoise(const TrainedModel& model, std::span<const double> x_star, std::size_t s_keep,
                            const PreimageSettings& settings);

/// Shallow kernel PCA baseline: alpha_k = u_k / sqrt(lambda_k) from the
/// centered training kernel matrix.
struct KpcaModel {
    Matrix x;
    KernelSpec kernel;
    Matrix alpha;  ///< s x N
    std::vector<double> eigenvalues;
    CenteringStats centering;
};

KpcaModel kpca_fit(const Matrix& x, const KernelSpec& kernel, std::size_t s);
PreimageResult kpca_denoise(const KpcaModel& model, std::span<const double> x_star, const PreimageSettings& settings);
/// Convenience form that fits the baseline on X first.
std::vector<double> kpca_denoise(const Matrix& x, const KernelSpec& kernel, std::size_t s,
                                 std::span<const double> x_star, const PreimageSettings& settings);

/// Mean squared Euclidean distance between corresponding rows.
double reconstruction_error(const Matrix& clean, const Matrix& denoised);

}  // namespace drkm
