#include "drkm/kernels.hpp"

#include <cmath>
#include <vector>

#include "drkm/error.hpp"
#include "drkm/linalg.hpp"
#include "drkm/simd.hpp"

namespace drkm {

void KernelSpec::validate() const {
    if (family == KernelFamily::Rbf && !(sigma2 > 0.0 && std::isfinite(sigma2))) {
        throw InvalidArgument("RBF bandwidth sigma2 must be positive and finite, got " +
                              std::to_string(sigma2));
    }
}

std::string_view to_string(KernelFamily f) noexcept {
    return f == KernelFamily::Rbf ? "rbf" : "linear";
}

KernelFamily kernel_family_from_string(std::string_view s) {
    if (s == "rbf") return KernelFamily::Rbf;
    if (s == "linear") return KernelFamily::Linear;
    throw InvalidArgument("unknown kernel family '" + std::string(s) + "'");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("kernel_eval: dimension mismatch " + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()));
    }
    spec.validate();
    double acc = 0.0;
    if (spec.family == KernelFamily::Linear) {
        for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * y[k];
        return acc;
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = y[k] - x[k];
        acc += d * d;
    }
    return std::exp(-acc / (2.0 * spec.sigma2));
}

void kernel_row(const KernelSpec& spec, std::span<const double> x, const Matrix& points_t,
                std::span<double> sqdist, std::span<double> out) {
    const std::size_t m = points_t.cols();
    if (x.size() != points_t.rows() || out.size() != m) {
        throw InvalidArgument("kernel_row: dimension mismatch");
    }
    if (spec.family == KernelFamily::Linear) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < x.size(); ++k) simd::axpy(x[k], points_t.row(k).data(), out.data(), m);
        return;
    }
    if (sqdist.size() != m) throw InvalidArgument("kernel_row: sqdist buffer has wrong length");
    std::fill(sqdist.begin(), sqdist.end(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        simd::accumulate_sq_diff(points_t.row(k).data(), x[k], sqdist.data(), m);
    }
    simd::exp_scaled(sqdist.data(), -1.0 / (2.0 * spec.sigma2), out.data(), m);
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) {
        throw InvalidArgument("kernel_matrix: feature dimension mismatch " +
                              std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
    }
    spec.validate();
    const Matrix yt = transpose(y);
    Matrix k(x.rows(), y.rows());
    std::vector<double> sqdist(spec.is_rbf() ? y.rows() : 0);
    for (std::size_t i = 0; i < x.rows(); ++i) kernel_row(spec, x.row(i), yt, sqdist, k.row(i));
    return k;
}

Matrix center_kernel_matrix(const Matrix& k) {
    if (!k.is_square()) throw InvalidArgument("center_kernel_matrix: matrix is not square");
    const std::size_t n = k.rows();
    if (n == 0) return k;
    std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += k(i, j);
            col_mean[j] += k(i, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        grand += row_mean[i];
        row_mean[i] /= static_cast<double>(n);
        col_mean[i] /= static_cast<double>(n);
    }
    grand /= static_cast<double>(n) * static_cast<double>(n);
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) c(i, j) = k(i, j) - row_mean[i] - col_mean[j] + grand;
    }
    return c;
}

}  // namespace drkm
