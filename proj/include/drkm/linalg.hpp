#pragma once

#include <cstddef>
#include <vector>

#include "drkm/matrix.hpp"

namespace drkm {

/// Top eigenpairs of a symmetric matrix.
///
/// `values` are sorted descending and column k of `vectors` is the unit-norm
/// eigenvector for values[k]. In each eigenvector the entry of largest
/// magnitude is non-negative (first such index on ties), which makes the
/// result canonical for simple eigenvalues.
struct EigenPairs {
    std::vector<double> values;
    Matrix vectors;
};

/// Throws InvalidMatrix for non-square or asymmetric input and
/// InvalidArgument unless 1 <= k <= rows.
EigenPairs sym_eig_topk(const Matrix& a, std::size_t k);

/// Applies the sign convention of EigenPairs to every column in place.
void canonicalize_signs(Matrix& vectors);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double trace(const Matrix& a);

/// ||a - a^T||_F / max(||a||_F, tiny).
double relative_asymmetry(const Matrix& a);

}  // namespace drkm
