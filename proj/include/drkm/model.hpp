#pragma once

#include <cstddef>
#include <vector>

#include "drkm/kernels.hpp"
#include "drkm/matrix.hpp"

namespace drkm {

/// One kernel PCA level of the stack: s selected components, regularization
/// constants eta and lambda, and the kernel applied to the level's input.
struct LayerConfig {
    std::size_t s = 1;
    double eta = 1.0;
    double lambda = 1.0;
    KernelSpec kernel;

    void validate() const;
    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

struct ModelConfig {
    std::vector<LayerConfig> layers;

    void validate() const;
    /// Sum of s over all layers, i.e. the row count of the stacked H.
    std::size_t total_components() const noexcept;
    /// Input dimension of layer l given the data dimension.
    std::size_t input_dim(std::size_t layer, std::size_t data_dim) const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Training data plus the hidden features of every layer.
///
/// H[l] is s_l x N with column i the code of point i. The interconnection
/// matrices are eliminated and never stored. K0, the layer-1 kernel on the
/// training points, is cached and kept consistent with the layer-1 bandwidth;
/// deeper kernel matrices are recomputed from H on each evaluation.
class ModelState {
public:
    ModelState(ModelConfig config, Matrix x, std::vector<Matrix> hidden);

    const ModelConfig& config() const noexcept { return config_; }
    const Matrix& data() const noexcept { return x_; }
    /// d x N copy of the data (coordinate-major), used for kernel rows.
    const Matrix& data_t() const noexcept { return xt_; }
    const std::vector<Matrix>& hidden() const noexcept { return h_; }
    const Matrix& hidden(std::size_t layer) const { return h_.at(layer); }
    const Matrix& k0() const noexcept { return k0_; }
    std::size_t n_points() const noexcept { return x_.rows(); }
    std::size_t n_layers() const noexcept { return config_.layers.size(); }

    void set_hidden(std::vector<Matrix> hidden);
    /// Updates the RBF bandwidth of one layer (refreshing K0 for layer 0).
    void set_sigma2(std::size_t layer, double sigma2);

    /// Vertical stack of all H[l].
    Matrix stacked_hidden() const;

private:
    void check_hidden(const std::vector<Matrix>& hidden) const;

    ModelConfig config_;
    Matrix x_;
    Matrix xt_;
    std::vector<Matrix> h_;
    Matrix k0_;
};

/// Gradient of the penalty function with respect to every H[l], plus
/// d/d(log sigma2) for layers whose bandwidth is trainable (0 otherwise).
struct PenaltyGradient {
    std::vector<Matrix> hidden;
    std::vector<double> log_sigma2;

    double norm() const;
};

struct ConstraintResidual {
    Matrix c;  ///< H_stack H_stack^T - I
    double norm = 0.0;

    /// Frobenius norm of block (a, b), layer-indexed.
    double block_norm(const ModelConfig& config, std::size_t a, std::size_t b) const;
};

struct Evaluation {
    double objective = 0.0;
    double residual = 0.0;  ///< ||H_stack H_stack^T - I||_F
    double penalty = 0.0;   ///< objective + mu/2 residual^2
    PenaltyGradient gradient;  ///< filled only when requested
};

/// sum_l -1/(2 eta_l) tr(H_l K_{l-1} H_l^T) + lambda_l/2 tr(H_l^T H_l).
double objective(const ModelState& state);
ConstraintResidual constraint_residual(const ModelState& state);
double penalty(const ModelState& state, double mu);
PenaltyGradient penalty_gradient(const ModelState& state, double mu);

/// Objective, residual, penalty and (optionally) the gradient in one sweep.
Evaluation evaluate(const ModelState& state, double mu, bool with_gradient);

/// Kernel matrix feeding layer l: K0 for l = 0, else the kernel of the
/// columns of H[l-1] under layer l's kernel.
Matrix layer_kernel_matrix(const ModelState& state, std::size_t layer);

}  // namespace drkm
