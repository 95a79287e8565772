#include "drkm/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drkm/error.hpp"
#include "drkm/simd.hpp"

namespace drkm {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

constexpr double kSymmetryTol = 1e-10;

}  // namespace

double relative_asymmetry(const Matrix& a) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            const double d = a(i, j) - a(j, i);
            diff += 2.0 * d * d;
        }
    }
    const double norm = frobenius_norm(a);
    return std::sqrt(diff) / std::max(norm, std::numeric_limits<double>::min());
}

void canonicalize_signs(Matrix& vectors) {
    // Magnitudes within a relative 1e-12 of the maximum count as ties so that
    // analytically equal entries are not separated by rounding noise.
    constexpr double kTieTol = 1e-12;
    for (std::size_t c = 0; c < vectors.cols(); ++c) {
        double best = 0.0;
        for (std::size_t r = 0; r < vectors.rows(); ++r) best = std::max(best, std::abs(vectors(r, c)));
        std::size_t arg = 0;
        while (arg < vectors.rows() && std::abs(vectors(arg, c)) < best * (1.0 - kTieTol)) ++arg;
        if (arg < vectors.rows() && vectors(arg, c) < 0.0) {
            for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, c) = -vectors(r, c);
        }
    }
}

EigenPairs sym_eig_topk(const Matrix& a, std::size_t k) {
    if (!a.is_square() || a.empty()) {
        throw InvalidMatrix("sym_eig_topk needs a non-empty square matrix, got " + shape(a));
    }
    if (!a.all_finite()) throw InvalidMatrix("sym_eig_topk: non-finite entries");
    if (relative_asymmetry(a) > kSymmetryTol) {
        throw InvalidMatrix("sym_eig_topk: matrix is not symmetric");
    }
    const std::size_t n = a.rows();
    if (k < 1 || k > n) {
        throw InvalidArgument("sym_eig_topk: k=" + std::to_string(k) + " out of range [1, " +
                              std::to_string(n) + "]");
    }

    Eigen::MatrixXd sym(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw InvalidMatrix("sym_eig_topk: eigensolver did not converge");
    }

    // Eigen sorts ascending.
    EigenPairs out;
    out.values.resize(k);
    out.vectors = Matrix(n, k);
    for (std::size_t c = 0; c < k; ++c) {
        const auto src = static_cast<Eigen::Index>(n - 1 - c);
        out.values[c] = solver.eigenvalues()(src);
        for (std::size_t r = 0; r < n; ++r) {
            out.vectors(r, c) = solver.eigenvectors()(static_cast<Eigen::Index>(r), src);
        }
    }
    canonicalize_signs(out.vectors);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InvalidArgument("matmul: " + shape(a) + " times " + shape(b));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = c.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik != 0.0) simd::axpy(aik, b.row(k).data(), out, b.cols());
        }
    }
    return c;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw InvalidArgument("matmul_transposed: " + shape(a) + " times transpose of " + shape(b));
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            c(i, j) = simd::dot(a.row(i).data(), b.row(j).data(), a.cols());
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

double frobenius_norm(const Matrix& a) {
    return std::sqrt(simd::dot(a.data(), a.data(), a.size()));
}

double trace(const Matrix& a) {
    if (!a.is_square()) throw InvalidArgument("trace of non-square matrix " + shape(a));
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

}  // namespace drkm
