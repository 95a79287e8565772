#include "drkm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "drkm/csv.hpp"
#include "drkm/error.hpp"
#include "drkm/random.hpp"

namespace drkm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpiralTurns = 3.0;
constexpr double kSpiralThetaMax = 2.0 * kPi * kSpiralTurns;
constexpr double kSpiralA = 1.0 / kSpiralThetaMax;  // r = a theta reaches 1
constexpr double kRingInner = 0.5;

// Arc length of r = a theta from 0 to theta.
double spiral_arc(double theta) {
    return 0.5 * kSpiralA * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

double spiral_theta_at(double s) {
    double lo = 0.0, hi = kSpiralThetaMax;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (spiral_arc(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Noise streams are kept apart from the shape streams of the same seed.
constexpr std::uint64_t kShapeStream = 0x5348;
constexpr std::uint64_t kNoiseStream = 0x4e4f;

}  // namespace

std::string_view to_string(ShapeKind k) noexcept {
    switch (k) {
        case ShapeKind::Square: return "square";
        case ShapeKind::HalfCircle: return "half_circle";
        case ShapeKind::Spiral: return "spiral";
        case ShapeKind::Ring: return "ring";
        case ShapeKind::Composite: return "composite";
    }
    return "?";
}

ShapeKind shape_kind_from_string(std::string_view s) {
    for (auto k : {ShapeKind::Square, ShapeKind::HalfCircle, ShapeKind::Spiral, ShapeKind::Ring,
                   ShapeKind::Composite}) {
        if (s == to_string(k)) return k;
    }
    throw InvalidArgument("unknown shape '" + std::string(s) + "'");
}

void ShapeSpec::validate() const {
    if (n_points < 1) throw InvalidArgument("shape needs at least one point");
    if (kind == ShapeKind::Composite) {
        if (parts.empty()) throw InvalidArgument("composite shape needs parts");
        for (const auto& p : parts) {
            if (p.kind == ShapeKind::Composite) throw InvalidArgument("composite parts must be primitive");
            if (!std::isfinite(p.offset[0]) || !std::isfinite(p.offset[1]) || !(p.scale > 0.0) ||
                !std::isfinite(p.scale)) {
                throw InvalidArgument("composite part needs finite offset and positive scale");
            }
        }
    } else if (!parts.empty()) {
        throw InvalidArgument("only composite shapes take parts");
    }
}

std::vector<ShapePart> composite_square_spiral() {
    return {{ShapeKind::Square, {-0.5, 0.0}, 0.45}, {ShapeKind::Spiral, {0.5, 0.0}, 0.45}};
}

std::vector<ShapePart> composite_two_squares_spiral_ring() {
    return {{ShapeKind::Square, {-0.5, 0.5}, 0.45},
            {ShapeKind::Square, {0.5, -0.5}, 0.45},
            {ShapeKind::Spiral, {0.5, 0.5}, 0.45},
            {ShapeKind::Ring, {-0.5, -0.5}, 0.45}};
}

double curve_length(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Square: return 8.0;
        case ShapeKind::HalfCircle: return kPi;
        case ShapeKind::Spiral: return spiral_arc(kSpiralThetaMax);
        case ShapeKind::Ring: return 2.0 * kPi * (1.0 + kRingInner);
        case ShapeKind::Composite: break;
    }
    throw InvalidArgument("curve_length needs a primitive shape");
}

std::array<double, 2> curve_point(ShapeKind kind, double t) {
    switch (kind) {
        case ShapeKind::Square: {
            // Counter-clockwise from (-1, -1), one side per quarter.
            const double u = 4.0 * t;
            const int side = std::min(3, static_cast<int>(u));
            const double f = 2.0 * (u - side) - 1.0;
            switch (side) {
                case 0: return {f, -1.0};
                case 1: return {1.0, f};
                case 2: return {-f, 1.0};
                default: return {-1.0, -f};
            }
        }
        case ShapeKind::HalfCircle: return {std::cos(kPi * t), std::sin(kPi * t)};
        case ShapeKind::Spiral: {
            const double th = spiral_theta_at(t * spiral_arc(kSpiralThetaMax));
            const double r = kSpiralA * th;
            return {r * std::cos(th), r * std::sin(th)};
        }
        case ShapeKind::Ring: {
            const double outer = 1.0 / (1.0 + kRingInner);
            if (t < outer) {
                const double th = 2.0 * kPi * t / outer;
                return {std::cos(th), std::sin(th)};
            }
            const double th = 2.0 * kPi * (t - outer) / (1.0 - outer);
            return {kRingInner * std::cos(th), kRingInner * std::sin(th)};
        }
        case ShapeKind::Composite: break;
    }
    throw InvalidArgument("curve_point needs a primitive shape");
}

std::vector<std::size_t> allocate_points(const std::vector<ShapePart>& parts, std::size_t n) {
    std::vector<double> w;
    for (const auto& p : parts) w.push_back(curve_length(p.kind) * p.scale);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::size_t> out(parts.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double exact = n * w[i] / total;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        used += out[i];
        rem.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++out[rem[k % rem.size()].second];
    return out;
}

std::uint64_t part_seed(std::uint64_t seed, std::size_t part) {
    return splitmix64(seed + 0x9e3779b97f4a7c15ull * (part + 1));
}

Matrix generate_shape(const ShapeSpec& spec) {
    spec.validate();
    if (spec.kind != ShapeKind::Composite) {
        Rng rng(spec.seed, kShapeStream);
        Matrix x(spec.n_points, 2);
        for (std::size_t i = 0; i < spec.n_points; ++i) {
            const auto p = curve_point(spec.kind, rng.uniform());
            x(i, 0) = p[0];
            x(i, 1) = p[1];
        }
        return x;
    }
    const auto counts = allocate_points(spec.parts, spec.n_points);
    Matrix x(spec.n_points, 2);
    std::size_t row = 0;
    for (std::size_t k = 0; k < spec.parts.size(); ++k) {
        if (counts[k] == 0) continue;
        const auto& part = spec.parts[k];
        const Matrix p = generate_shape(ShapeSpec{part.kind, counts[k], part_seed(spec.seed, k), {}});
        for (std::size_t i = 0; i < p.rows(); ++i, ++row) {
            x(row, 0) = part.offset[0] + part.scale * p(i, 0);
            x(row, 1) = part.offset[1] + part.scale * p(i, 1);
        }
    }
    return x;
}

Matrix add_noise(const Matrix& x, double sigma_n, std::uint64_t seed) {
    if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n)) throw InvalidArgument("noise level must be >= 0");
    Matrix y = x;
    if (sigma_n == 0.0) return y;
    Rng rng(seed, kNoiseStream);
    for (auto& v : y.values()) v += sigma_n * rng.normal();
    return y;
}

std::vector<std::size_t> FactorDataset::factor_column(std::size_t j) const {
    std::vector<std::size_t> c(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) c[i] = values[i].at(j);
    return c;
}

namespace {

struct ToyGenerator {
    std::vector<std::size_t> cards;
    std::size_t dim;
    std::vector<std::vector<double>> directions;  // one unit vector per factor
    std::vector<std::vector<double>> rotation;    // dim x dim orthogonal

    ToyGenerator(const std::vector<std::size_t>& c, std::size_t d, std::uint64_t seed) : cards(c), dim(d) {
        if (c.empty()) throw InvalidArgument("factor dataset needs at least one factor");
        for (auto k : c)
            if (k < 2) throw InvalidArgument("every factor needs cardinality >= 2");
        if (d < c.size()) throw InvalidArgument("embedding dimension must be >= number of factors");
        Rng dir_rng(seed, 1);
        for (std::size_t f = 0; f < c.size(); ++f) {
            std::vector<double> u(d);
            double n2 = 0.0;
            for (auto& v : u) {
                v = dir_rng.normal();
                n2 += v * v;
            }
            for (auto& v : u) v /= std::sqrt(n2);
            directions.push_back(std::move(u));
        }
        // Gram-Schmidt on a Gaussian matrix gives a random orthogonal R.
        Rng rot_rng(seed, 2);
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> r(d);
            for (auto& v : r) v = rot_rng.normal();
            for (const auto& q : rotation) {
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k) dot += r[k] * q[k];
                for (std::size_t k = 0; k < d; ++k) r[k] -= dot * q[k];
            }
            double n2 = 0.0;
            for (double v : r) n2 += v * v;
            for (auto& v : r) v /= std::sqrt(n2);
            rotation.push_back(std::move(r));
        }
    }

    std::vector<double> point(const std::vector<std::size_t>& tuple) const {
        if (tuple.size() != cards.size()) throw InvalidArgument("factor tuple has the wrong length");
        std::vector<double> z(dim, 0.0);
        const double gain = 1.0 / std::sqrt(static_cast<double>(cards.size()));
        for (std::size_t f = 0; f < cards.size(); ++f) {
            if (tuple[f] >= cards[f]) throw InvalidArgument("factor value out of range");
            const double m = -1.0 + 2.0 * static_cast<double>(tuple[f]) / static_cast<double>(cards[f] - 1);
            for (std::size_t k = 0; k < dim; ++k) z[k] += gain * m * directions[f][k];
        }
        std::vector<double> p(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += rotation[i][k] * z[k];
            p[i] = std::tanh(s);
        }
        return p;
    }
};

}  // namespace

std::vector<double> factor_toy_point(const std::vector<std::size_t>& cardinalities, std::size_t embedding_dim,
                                     std::uint64_t seed, const std::vector<std::size_t>& tuple) {
    return ToyGenerator(cardinalities, embedding_dim, seed).point(tuple);
}

FactorDataset generate_factor_toy(const std::vector<std::size_t>& cardinalities, std::size_t embedding_dim,
                                  std::uint64_t seed, std::size_t n_samples) {
    const ToyGenerator gen(cardinalities, embedding_dim, seed);
    FactorDataset ds;
    for (std::size_t f = 0; f < cardinalities.size(); ++f) {
        ds.factors.push_back({"f" + std::to_string(f + 1), cardinalities[f]});
    }
    if (n_samples == 0) {
        // Mixed-radix enumeration, last factor fastest.
        const std::size_t total = std::accumulate(cardinalities.begin(), cardinalities.end(), std::size_t{1},
                                                  std::multiplies<>());
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::vector<std::size_t> t(cardinalities.size());
            std::size_t rest = idx;
            for (std::size_t f = t.size(); f-- > 0;) {
                t[f] = rest % cardinalities[f];
                rest /= cardinalities[f];
            }
            ds.values.push_back(std::move(t));
        }
    } else {
        Rng rng(seed, 3);
        for (std::size_t i = 0; i < n_samples; ++i) {
            std::vector<std::size_t> t(cardinalities.size());
            for (std::size_t f = 0; f < t.size(); ++f) t[f] = rng.below(cardinalities[f]);
            ds.values.push_back(std::move(t));
        }
    }
    ds.points = Matrix(ds.values.size(), embedding_dim);
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
        const auto p = gen.point(ds.values[i]);
        std::copy(p.begin(), p.end(), ds.points.row(i).begin());
    }
    return ds;
}

namespace {

std::vector<std::string> coordinate_header(std::size_t d) {
    std::vector<std::string> h;
    for (std::size_t c = 0; c < d; ++c) h.push_back("x" + std::to_string(c + 1));
    return h;
}

// Data rows start after the metadata lines and the header.
std::size_t first_data_line(const CsvTable& t) { return t.meta.size() + 2; }

}  // namespace

void save_points_csv(const std::filesystem::path& path, const Matrix& x, const std::vector<std::string>& meta) {
    CsvTable t;
    t.meta = meta;
    t.header = coordinate_header(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<std::string> r;
        for (double v : x.row(i)) r.push_back(format_double(v));
        t.rows.push_back(std::move(r));
    }
    save_csv(path, t);
}

Matrix load_points_csv(const std::filesystem::path& path) {
    const CsvTable t = load_csv(path);
    const std::size_t base = first_data_line(t);
    if (t.header != coordinate_header(t.header.size())) {
        throw ParseError("expected header x1..x" + std::to_string(t.header.size()), base - 1);
    }
    if (t.rows.empty()) throw ParseError("no data rows", base);
    Matrix x(t.rows.size(), t.header.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t c = 0; c < t.header.size(); ++c) x(i, c) = parse_double(t.rows[i][c], base + i);
    return x;
}

void save_factor_csv(const std::filesystem::path& path, const FactorDataset& ds, const std::vector<std::string>& meta) {
    CsvTable t;
    t.meta = meta;
    for (const auto& f : ds.factors) t.meta.push_back("factor=" + f.name + ":" + std::to_string(f.cardinality));
    t.header = coordinate_header(ds.points.cols());
    for (const auto& f : ds.factors) t.header.push_back(f.name);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::string> r;
        for (double v : ds.points.row(i)) r.push_back(format_double(v));
        for (auto v : ds.values[i]) r.push_back(std::to_string(v));
        t.rows.push_back(std::move(r));
    }
    save_csv(path, t);
}

FactorDataset load_factor_csv(const std::filesystem::path& path) {
    const CsvTable t = load_csv(path);
    FactorDataset ds;
    std::size_t line = 1;
    for (const auto& m : t.meta) {
        if (m.rfind("factor=", 0) == 0) {
            const auto colon = m.rfind(':');
            if (colon == std::string::npos || colon < 7) throw ParseError("malformed factor line", line);
            const auto card = parse_int(std::string_view(m).substr(colon + 1), line);
            if (card < 1) throw ParseError("factor cardinality must be positive", line);
            ds.factors.push_back({m.substr(7, colon - 7), static_cast<std::size_t>(card)});
        }
        ++line;
    }
    const std::size_t header_line = t.meta.size() + 1;
    const std::size_t nf = ds.factors.size();
    if (nf == 0) throw ParseError("no factor declarations", header_line);
    if (t.header.size() <= nf) throw ParseError("header has no coordinate columns", header_line);
    const std::size_t d = t.header.size() - nf;
    if (!std::equal(t.header.begin(), t.header.begin() + d, coordinate_header(d).begin())) {
        throw ParseError("coordinate columns must be x1..x" + std::to_string(d), header_line);
    }
    for (std::size_t f = 0; f < nf; ++f) {
        if (t.header[d + f] != ds.factors[f].name) {
            throw ParseError("header column '" + t.header[d + f] + "' does not match declared factor '" +
                                 ds.factors[f].name + "'",
                             header_line);
        }
    }
    ds.points = Matrix(t.rows.size(), d);
    const std::size_t base = header_line + 1;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) ds.points(i, c) = parse_double(t.rows[i][c], base + i);
        std::vector<std::size_t> tup(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            const auto v = parse_int(t.rows[i][d + f], base + i);
            if (v < 0 || static_cast<std::size_t>(v) >= ds.factors[f].cardinality) {
                throw ParseError("factor value out of range", base + i);
            }
            tup[f] = static_cast<std::size_t>(v);
        }
        ds.values.push_back(std::move(tup));
    }
    return ds;
}

}  // namespace drkm
