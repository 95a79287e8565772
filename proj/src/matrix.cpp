#include "drkm/matrix.hpp"

#include <cmath>
#include <cstring>

#include "drkm/error.hpp"

namespace drkm {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw InvalidArgument("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::uint64_t fingerprint(const Matrix& m) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t shape[2] = {m.rows(), m.cols()};
    mix(shape, sizeof(shape));
    mix(m.data(), m.size() * sizeof(double));
    return h;
}

}  // namespace drkm
