#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "drkm/matrix.hpp"

namespace drkm {

enum class ShapeKind { Square, HalfCircle, Spiral, Ring, Composite };

std::string_view to_string(ShapeKind k) noexcept;
ShapeKind shape_kind_from_string(std::string_view s);

/// A primitive curve placed inside a composite: point = offset + scale * p.
struct ShapePart {
    ShapeKind kind = ShapeKind::Square;
    std::array<double, 2> offset{0.0, 0.0};
    double scale = 1.0;

    friend bool operator==(const ShapePart&, const ShapePart&) = default;
};

/// Primitive shapes live in [-1, 1]^2:
///   Square     perimeter of [-1, 1]^2
///   HalfCircle unit arc with y >= 0
///   Spiral     Archimedean r = theta / (6 pi), three turns, r up to 1
///   Ring       circles of radius 1 and 0.5
/// A composite is the union of its parts; points are split between parts in
/// proportion to their scaled curve length.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Square;
    std::size_t n_points = 1;
    std::uint64_t seed = 0;
    std::vector<ShapePart> parts;  ///< Composite only

    void validate() const;
    friend bool operator==(const ShapeSpec&, const ShapeSpec&) = default;
};

/// The two composite layouts used in the denoising study.
std::vector<ShapePart> composite_square_spiral();
std::vector<ShapePart> composite_two_squares_spiral_ring();

/// Point at arc-length fraction t in [0, 1) of a primitive curve.
std::array<double, 2> curve_point(ShapeKind kind, double t);
/// Total arc length of a primitive curve.
double curve_length(ShapeKind kind);

/// How many of n points each part receives (largest-remainder rounding).
std::vector<std::size_t> allocate_points(const std::vector<ShapePart>& parts, std::size_t n);
/// Seed of part i of a composite generated with `seed`.
std::uint64_t part_seed(std::uint64_t seed, std::size_t part);

/// N x 2 points uniform in arc length along the curve.
Matrix generate_shape(const ShapeSpec& spec);

/// X + N(0, sigma_n^2) per coordinate.
Matrix add_noise(const Matrix& x, double sigma_n, std::uint64_t seed);

struct Factor {
    std::string name;
    std::size_t cardinality = 2;
    friend bool operator==(const Factor&, const Factor&) = default;
};

struct FactorDataset {
    std::vector<Factor> factors;
    Matrix points;                                 ///< N x embedding_dim
    std::vector<std::vector<std::size_t>> values;  ///< N tuples of factor values

    std::size_t size() const noexcept { return points.rows(); }
    /// Column j of the factor tuples.
    std::vector<std::size_t> factor_column(std::size_t j) const;
};

/// Every factor value selects a fixed random direction u_f scaled by an
/// ordinal magnitude in [-1, 1]; the point is tanh(R sum_f m u_f) with R a
/// seeded random rotation. With n_samples = 0 the full grid is enumerated in
/// lexicographic order, otherwise n_samples tuples are drawn uniformly.
FactorDataset generate_factor_toy(const std::vector<std::size_t>& cardinalities, std::size_t embedding_dim,
                                  std::uint64_t seed, std::size_t n_samples = 0);

/// Point of one factor tuple under the toy generator.
std::vector<double> factor_toy_point(const std::vector<std::size_t>& cardinalities, std::size_t embedding_dim,
                                     std::uint64_t seed, const std::vector<std::size_t>& tuple);

/// Points CSV: header x1..xd, one row per point.
void save_points_csv(const std::filesystem::path& path, const Matrix& x, const std::vector<std::string>& meta = {});
Matrix load_points_csv(const std::filesystem::path& path);

/// Factor CSV: "# factor=name:cardinality" lines, header x1..xd then factor names.
void save_factor_csv(const std::filesystem::path& path, const FactorDataset& ds,
                     const std::vector<std::string>& meta = {});
FactorDataset load_factor_csv(const std::filesystem::path& path);

}  // namespace drkm
