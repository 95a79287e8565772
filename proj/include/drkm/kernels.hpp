#pragma once

#include <span>
#include <string>
#include <string_view>

#include "drkm/matrix.hpp"

namespace drkm {

enum class KernelFamily { Rbf, Linear };

/// Kernel family plus parameters. RBF is exp(-||x - y||^2 / (2 sigma2)).
/// When `trainable_bandwidth` is set the optimizer updates log(sigma2).
struct KernelSpec {
    KernelFamily family = KernelFamily::Rbf;
    double sigma2 = 1.0;
    bool trainable_bandwidth = false;

    static KernelSpec rbf(double sigma2, bool trainable = false) {
        return {KernelFamily::Rbf, sigma2, trainable};
    }
    static KernelSpec linear() { return {KernelFamily::Linear, 1.0, false}; }

    /// Throws InvalidArgument on a non-positive / non-finite RBF bandwidth.
    void validate() const;
    bool is_rbf() const noexcept { return family == KernelFamily::Rbf; }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

std::string_view to_string(KernelFamily f) noexcept;
KernelFamily kernel_family_from_string(std::string_view s);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Entry (i, j) = kernel_eval(spec, X_i, Y_j); rows of X and Y are points.
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x, const Matrix& y);

/// One row of a kernel matrix against a point set stored coordinate-major
/// (`points_t` is d x M, i.e. the transpose of the usual N x d layout).
/// For RBF the squared distances are left in `sqdist` (length M); for the
/// linear kernel `sqdist` is untouched and may be empty.
void kernel_row(const KernelSpec& spec, std::span<const double> x, const Matrix& points_t,
                std::span<double> sqdist, std::span<double> out);

/// Double centering K - 1K/N - K1/N + 1K1/N^2.
Matrix center_kernel_matrix(const Matrix& k);

}  // namespace drkm
