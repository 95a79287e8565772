#include "drkm/encoder.hpp"

#include <charconv>
#include <cmath>
#include <string_view>

#include "drkm/error.hpp"
#include "drkm/linalg.hpp"
#include "drkm/random.hpp"
#include "drkm/simd.hpp"

namespace drkm {

CenteringStats CenteringStats::of(const Matrix& k) {
    CenteringStats c;
    const std::size_t n = k.rows();
    c.column_means.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0 / n, k.row(i).data(), c.column_means.data(), n);
    c.grand_mean = simd::sum(c.column_means.data(), n) / n;
    return c;
}

void CenteringStats::center(std::span<double> kvec) const {
    const std::size_t n = kvec.size();
    const double shift = simd::sum(kvec.data(), n) / n - grand_mean;
    for (std::size_t i = 0; i < n; ++i) kvec[i] -= column_means[i] + shift;
}

TrainedModel::TrainedModel(ModelState state) : state_(std::move(state)) {
    centering_.push_back(CenteringStats::of(state_.k0()));
    for (std::size_t l = 1; l < state_.n_layers(); ++l) {
        centering_.push_back(CenteringStats::of(layer_kernel_matrix(state_, l)));
    }
}

std::vector<std::vector<double>> encode(const TrainedModel& model, std::span<const double> x_star) {
    const ModelState& st = model.state();
    if (x_star.size() != st.data().cols()) {
        throw InvalidArgument("encode: point has dimension " + std::to_string(x_star.size()) + ", model expects " +
                              std::to_string(st.data().cols()));
    }
    const std::size_t n = st.n_points();
    std::vector<double> kvec(n), sq(n);
    std::vector<std::vector<double>> out;
    std::vector<double> input(x_star.begin(), x_star.end());
    for (std::size_t l = 0; l < st.n_layers(); ++l) {
        const auto& layer = st.config().layers[l];
        const Matrix& points_t = l == 0 ? st.data_t() : st.hidden(l - 1);
        kernel_row(layer.kernel, input, points_t, sq, kvec);
        const Matrix& h = st.hidden(l);
        std::vector<double> code(layer.s);
        const double scale = 1.0 / (layer.lambda * layer.eta);
        for (std::size_t c = 0; c < layer.s; ++c) code[c] = scale * simd::dot(h.row(c).data(), kvec.data(), n);
        out.push_back(code);
        input = std::move(code);
    }
    return out;
}

Matrix encode_concatenated(const TrainedModel& model, const Matrix& x) {
    Matrix z(x.rows(), model.config().total_components());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t c = 0;
        for (const auto& code : encode(model, x.row(i)))
            for (double v : code) z(i, c++) = v;
    }
    return z;
}

void PreimageSettings::validate() const {
    if (max_iters < 1) throw InvalidArgument("pre-image max_iters must be >= 1");
    if (!(tol > 0.0)) throw InvalidArgument("pre-image tol must be positive");
    if (!(restart_scale >= 0.0)) throw InvalidArgument("pre-image restart_scale must be >= 0");
}

namespace {

constexpr double kCollapse = 1e-300;

struct Iterate {
    bool collapsed = false;
    bool converged = false;
    std::size_t iterations = 0;
};

Iterate run_fixed_point(const Matrix& x, const Matrix& xt, const KernelSpec& kernel, const Matrix& alpha,
                        std::vector<double>& cur, const PreimageSettings& s, const CenteringStats* centering) {
    const std::size_t n = x.rows(), d = x.cols(), m = alpha.rows();
    std::vector<double> kvec(n), sq(n), kc(n), beta(n), next(d);
    Iterate it;
    for (std::size_t t = 0; t < s.max_iters; ++t) {
        kernel_row(kernel, cur, xt, sq, kvec);
        std::fill(beta.begin(), beta.end(), 0.0);
        const double* kz = kvec.data();
        if (centering) {
            kc = kvec;
            centering->center(kc);
            kz = kc.data();
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double z = simd::dot(alpha.row(k).data(), kz, n);
            simd::axpy(z, alpha.row(k).data(), beta.data(), n);
        }
        if (centering) {
            const double shift = (1.0 - simd::sum(beta.data(), n)) / n;
            for (auto& b : beta) b += shift;
        }
        simd::hadamard(beta.data(), kvec.data(), beta.data(), n);
        const double denom = simd::sum(beta.data(), n);
        if (!(std::abs(denom) >= kCollapse)) {
            it.collapsed = true;
            it.iterations = t;
            return it;
        }
        for (std::size_t c = 0; c < d; ++c) next[c] = simd::dot(beta.data(), xt.row(c).data(), n) / denom;
        double diff2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) diff2 += (next[c] - cur[c]) * (next[c] - cur[c]);
        cur.swap(next);
        it.iterations = t + 1;
        if (std::sqrt(diff2) <= s.tol) {
            it.converged = true;
            return it;
        }
    }
    return it;
}

}  // namespace

PreimageResult preimage(const Matrix& x_train, const KernelSpec& kernel, const Matrix& alpha,
                        std::span<const double> x_star, const PreimageSettings& settings,
                        const CenteringStats* centering) {
    settings.validate();
    if (!kernel.is_rbf()) throw InvalidArgument("pre-image iteration needs an RBF kernel");
    if (x_star.size() != x_train.cols()) throw InvalidArgument("pre-image: point dimension mismatch");
    if (alpha.cols() != x_train.rows() || alpha.rows() == 0) {
        throw InvalidArgument("pre-image: coefficient matrix must be K x N with K >= 1");
    }
    const Matrix xt = transpose(x_train);
    PreimageResult r;
    Rng rng(settings.restart_seed, 0x5052);
    for (std::size_t attempt = 0;; ++attempt) {
        std::vector<double> cur(x_star.begin(), x_star.end());
        if (attempt > 0)
            for (auto& v : cur) v += settings.restart_scale * rng.normal();
        const Iterate it = run_fixed_point(x_train, xt, kernel, alpha, cur, settings, centering);
        r.iterations += it.iterations;
        if (!it.collapsed) {
            r.x = std::move(cur);
            r.converged = it.converged;
            r.restarts = attempt;
            return r;
        }
        if (!settings.restart_on_collapse || attempt >= settings.max_restarts) {
            throw PreimageCollapse("pre-image normalizer vanished after " + std::to_string(r.iterations) +
                                   " iterations and " + std::to_string(attempt) + " restarts");
        }
    }
}

std::vector<ComponentRef> parse_component_mask(const std::string& text) {
    std::vector<ComponentRef> mask;
    std::string_view rest(text);
    auto number = [&](std::string_view s) {
        std::size_t v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || v == 0) {
            throw InvalidArgument("component mask entry '" + std::string(s) + "' is not a positive integer");
        }
        return v;
    };
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            mask.push_back({0, number(item) - 1});
        } else {
            mask.push_back({number(item.substr(0, colon)) - 1, number(item.substr(colon + 1)) - 1});
        }
    }
    if (mask.empty()) throw InvalidArgument("component mask selects no components");
    return mask;
}

std::string format_component_mask(const std::vector<ComponentRef>& mask) {
    std::string s;
    for (const auto& c : mask) {
        if (!s.empty()) s += ',';
        s += std::to_string(c.layer + 1) + ":" + std::to_string(c.component + 1);
    }
    return s;
}

std::vector<ComponentRef> leading_components(std::size_t s_keep) {
    std::vector<ComponentRef> m;
    for (std::size_t c = 0; c < s_keep; ++c) m.push_back({0, c});
    return m;
}

PreimageResult drkm_denoise(const TrainedModel& model, std::span<const double> x_star,
                            const std::vector<ComponentRef>& mask, const PreimageSettings& settings) {
    const ModelState& st = model.state();
    if (mask.empty()) throw InvalidArgument("component mask selects no components");
    Matrix alpha(mask.size(), st.n_points());
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const auto [l, c] = mask[k];
        if (l >= st.n_layers() || c >= st.config().layers[l].s) {
            throw InvalidArgument("component " + format_component_mask({mask[k]}) + " does not exist");
        }
        std::copy(st.hidden(l).row(c).begin(), st.hidden(l).row(c).end(), alpha.row(k).begin());
    }
    return preimage(st.data(), st.config().layers[0].kernel, alpha, x_star, settings,
                    settings.centered ? &model.centering(0) : nullptr);
}

PreimageResult drkm_denoise(const TrainedModel& model, std::span<const double> x_star, std::size_t s_keep,
                            const PreimageSettings& settings) {
    if (s_keep < 1 || s_keep > model.config().layers[0].s) {
        throw InvalidArgument("s_keep must lie in [1, s_1]");
    }
    return drkm_denoise(model, x_star, leading_components(s_keep), settings);
}

KpcaModel kpca_fit(const Matrix& x, const KernelSpec& kernel, std::size_t s) {
    if (!kernel.is_rbf()) throw InvalidArgument("kernel PCA denoising needs an RBF kernel");
    const Matrix k = kernel_matrix(kernel, x, x);
    if (x.rows() == 1 && s == 1) {
        // The centered kernel of one point vanishes; keep the uncentered
        // direction phi(x_1) / |phi(x_1)| so the baseline still has a component.
        return KpcaModel{x, kernel, Matrix{{1.0 / std::sqrt(k(0, 0))}}, {k(0, 0)}, CenteringStats::of(k)};
    }
    const auto eig = sym_eig_topk(center_kernel_matrix(k), s);
    KpcaModel m{x, kernel, Matrix(s, x.rows()), eig.values, CenteringStats::of(k)};
    for (std::size_t c = 0; c < s; ++c) {
        if (!(eig.values[c] > 0.0)) throw InvalidArgument("kernel PCA component " + std::to_string(c + 1) +
                                                          " has a non-positive eigenvalue");
        const double inv = 1.0 / std::sqrt(eig.values[c]);
        for (std::size_t i = 0; i < x.rows(); ++i) m.alpha(c, i) = inv * eig.vectors(i, c);
    }
    return m;
}

PreimageResult kpca_denoise(const KpcaModel& model, std::span<const double> x_star, const PreimageSettings& settings) {
    return preimage(model.x, model.kernel, model.alpha, x_star, settings,
                    settings.centered ? &model.centering : nullptr);
}

std::vector<double> kpca_denoise(const Matrix& x, const KernelSpec& kernel, std::size_t s,
                                 std::span<const double> x_star, const PreimageSettings& settings) {
    return kpca_denoise(kpca_fit(x, kernel, s), x_star, settings).x;
}

double reconstruction_error(const Matrix& clean, const Matrix& denoised) {
    if (clean.rows() != denoised.rows() || clean.cols() != denoised.cols()) {
        throw InvalidArgument("reconstruction_error: shape mismatch");
    }
    if (clean.rows() == 0) throw InvalidArgument("reconstruction_error: no points");
    double s = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = clean.data()[i] - denoised.data()[i];
        s += d * d;
    }
    return s / clean.rows();
}

}  // namespace drkm
