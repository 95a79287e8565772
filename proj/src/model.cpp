#include "drkm/model.hpp"

#include <cmath>
#include <string>

#include "drkm/error.hpp"
#include "drkm/linalg.hpp"
#include "drkm/simd.hpp"

namespace drkm {

void LayerConfig::validate() const {
    if (s < 1) throw InvalidArgument("layer needs at least one component");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
    kernel.validate();
}

void ModelConfig::validate() const {
    if (layers.empty()) throw InvalidArgument("model needs at least one layer");
    for (const auto& l : layers) l.validate();
}

std::size_t ModelConfig::total_components() const noexcept {
    std::size_t t = 0;
    for (const auto& l : layers) t += l.s;
    return t;
}

std::size_t ModelConfig::input_dim(std::size_t layer, std::size_t data_dim) const {
    return layer == 0 ? data_dim : layers.at(layer - 1).s;
}

ModelState::ModelState(ModelConfig config, Matrix x, std::vector<Matrix> hidden)
    : config_(std::move(config)), x_(std::move(x)) {
    config_.validate();
    if (x_.rows() == 0 || x_.cols() == 0) throw InvalidArgument("model needs non-empty data");
    if (!x_.all_finite()) throw InvalidArgument("training data contains non-finite values");
    check_hidden(hidden);
    h_ = std::move(hidden);
    xt_ = transpose(x_);
    k0_ = kernel_matrix(config_.layers[0].kernel, x_, x_);
}

void ModelState::check_hidden(const std::vector<Matrix>& hidden) const {
    if (hidden.size() != config_.layers.size()) {
        throw InvalidArgument("expected " + std::to_string(config_.layers.size()) +
                              " hidden matrices, got " + std::to_string(hidden.size()));
    }
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        if (hidden[l].rows() != config_.layers[l].s || hidden[l].cols() != x_.rows()) {
            throw InvalidArgument("hidden matrix of layer " + std::to_string(l + 1) +
                                  " must be " + std::to_string(config_.layers[l].s) + "x" +
                                  std::to_string(x_.rows()));
        }
        if (!hidden[l].all_finite()) {
            throw InvalidArgument("hidden matrix of layer " + std::to_string(l + 1) +
                                  " contains non-finite values");
        }
    }
}

void ModelState::set_hidden(std::vector<Matrix> hidden) {
    check_hidden(hidden);
    h_ = std::move(hidden);
}

void ModelState::set_sigma2(std::size_t layer, double sigma2) {
    auto& spec = config_.layers.at(layer).kernel;
    if (!spec.is_rbf()) throw InvalidArgument("bandwidth update on a non-RBF layer");
    KernelSpec updated = spec;
    updated.sigma2 = sigma2;
    updated.validate();
    spec = updated;
    if (layer == 0) k0_ = kernel_matrix(spec, x_, x_);
}

Matrix ModelState::stacked_hidden() const {
    Matrix s(config_.total_components(), x_.rows());
    std::size_t r = 0;
    for (const auto& h : h_) {
        std::copy(h.data(), h.data() + h.size(), s.row(r).data());
        r += h.rows();
    }
    return s;
}

double PenaltyGradient::norm() const {
    double acc = 0.0;
    for (const auto& g : hidden) acc += simd::dot(g.data(), g.data(), g.size());
    for (double g : log_sigma2) acc += g * g;
    return std::sqrt(acc);
}

double ConstraintResidual::block_norm(const ModelConfig& config, std::size_t a,
                                      std::size_t b) const {
    std::size_t ra = 0, rb = 0;
    for (std::size_t l = 0; l < a; ++l) ra += config.layers[l].s;
    for (std::size_t l = 0; l < b; ++l) rb += config.layers[l].s;
    double acc = 0.0;
    for (std::size_t i = 0; i < config.layers.at(a).s; ++i) {
        for (std::size_t j = 0; j < config.layers.at(b).s; ++j) {
            const double v = c(ra + i, rb + j);
            acc += v * v;
        }
    }
    return std::sqrt(acc);
}

namespace {

// Contribution of one layer: the trace term, d/dH_l, the chain-rule term
// d/dZ for the layer input Z (columns of H_{l-1}) and d/d(log sigma2).
struct LayerSweep {
    double trace_hkh = 0.0;
    Matrix grad_h;      // s x N, only -1/eta H K part
    Matrix grad_input;  // d_in x N, empty when not needed
    double grad_log_sigma2 = 0.0;
};

LayerSweep sweep_layer(const ModelState& state, std::size_t layer, bool with_gradient) {
    const auto& cfg = state.config().layers[layer];
    const Matrix& h = state.hidden(layer);
    const std::size_t n = state.n_points();
    const std::size_t s = cfg.s;
    const Matrix& zt = layer == 0 ? state.data_t() : state.hidden(layer - 1);
    const std::size_t d_in = zt.rows();
    const bool rbf = cfg.kernel.is_rbf();
    const bool use_cache = layer == 0 && !(with_gradient && cfg.kernel.trainable_bandwidth);
    const bool need_input_grad = with_gradient && layer > 0;
    const bool need_bandwidth_grad = with_gradient && rbf && cfg.kernel.trainable_bandwidth;
    const bool need_w = need_input_grad || need_bandwidth_grad;

    LayerSweep out;
    if (with_gradient) out.grad_h = Matrix(s, n);
    if (need_input_grad) out.grad_input = Matrix(d_in, n);

    std::vector<double> krow_buf(use_cache ? 0 : n), sqdist(rbf && !use_cache ? n : 0);
    std::vector<double> g(need_w ? n : 0), w(need_w ? n : 0);
    std::vector<double> z(d_in);
    const double inv_eta = 1.0 / cfg.eta;

    for (std::size_t i = 0; i < n; ++i) {
        const double* krow;
        if (use_cache) {
            krow = state.k0().row(i).data();
        } else {
            for (std::size_t k = 0; k < d_in; ++k) z[k] = zt(k, i);
            kernel_row(cfg.kernel, z, zt, sqdist, krow_buf);
            krow = krow_buf.data();
        }
        for (std::size_t c = 0; c < s; ++c) {
            const double hk = simd::dot(h.row(c).data(), krow, n);
            out.trace_hkh += h(c, i) * hk;
            if (with_gradient) out.grad_h(c, i) = -inv_eta * hk;
        }
        if (!need_w) continue;

        // g_j = h_i . h_j (row i of H^T H), w = K_i. .* g
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t c = 0; c < s; ++c) simd::axpy(h(c, i), h.row(c).data(), g.data(), n);
        simd::hadamard(krow, g.data(), w.data(), n);

        if (need_input_grad) {
            if (rbf) {
                const double coef = inv_eta / cfg.kernel.sigma2;
                const double wsum = simd::sum(w.data(), n);
                for (std::size_t k = 0; k < d_in; ++k) {
                    const double wz = simd::dot(w.data(), zt.row(k).data(), n);
                    out.grad_input(k, i) = coef * (z[k] * wsum - wz);
                }
            } else {
                for (std::size_t k = 0; k < d_in; ++k) {
                    out.grad_input(k, i) = -inv_eta * simd::dot(g.data(), zt.row(k).data(), n);
                }
            }
        }
        if (need_bandwidth_grad) {
            out.grad_log_sigma2 +=
                -inv_eta / (4.0 * cfg.kernel.sigma2) * simd::dot(w.data(), sqdist.data(), n);
        }
    }
    return out;
}

}  // namespace

Evaluation evaluate(const ModelState& state, double mu, bool with_gradient) {
    const auto& layers = state.config().layers;
    const std::size_t nl = layers.size();
    const std::size_t n = state.n_points();

    Evaluation ev;
    if (with_gradient) {
        ev.gradient.hidden.reserve(nl);
        ev.gradient.log_sigma2.assign(nl, 0.0);
    }
    std::vector<Matrix> input_grads(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& cfg = layers[l];
        const Matrix& h = state.hidden(l);
        LayerSweep sw = sweep_layer(state, l, with_gradient);
        const double hh = simd::dot(h.data(), h.data(), h.size());
        ev.objective += -sw.trace_hkh / (2.0 * cfg.eta) + 0.5 * cfg.lambda * hh;
        if (with_gradient) {
            simd::axpy(cfg.lambda, h.data(), sw.grad_h.data(), h.size());
            ev.gradient.hidden.push_back(std::move(sw.grad_h));
            ev.gradient.log_sigma2[l] = sw.grad_log_sigma2;
            input_grads[l] = std::move(sw.grad_input);
        }
    }
    if (with_gradient) {
        for (std::size_t l = 1; l < nl; ++l) {
            auto& gprev = ev.gradient.hidden[l - 1];
            simd::axpy(1.0, input_grads[l].data(), gprev.data(), gprev.size());
        }
    }

    // Penalty on the stacked rows: C = S S^T - I, dQ/dS = 2 mu C S.
    std::vector<const double*> rows;
    std::vector<double*> grad_rows;
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t c = 0; c < layers[l].s; ++c) {
            rows.push_back(state.hidden(l).row(c).data());
            if (with_gradient) grad_rows.push_back(ev.gradient.hidden[l].row(c).data());
        }
    }
    const std::size_t m = rows.size();
    Matrix cmat(m, m);
    double res2 = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            const double v = simd::dot(rows[a], rows[b], n) - (a == b ? 1.0 : 0.0);
            cmat(a, b) = v;
            cmat(b, a) = v;
            res2 += (a == b ? 1.0 : 2.0) * v * v;
        }
    }
    ev.residual = std::sqrt(res2);
    ev.penalty = ev.objective + 0.5 * mu * res2;
    if (with_gradient) {
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                simd::axpy(2.0 * mu * cmat(a, b), rows[b], grad_rows[a], n);
            }
        }
    }
    return ev;
}

double objective(const ModelState& state) { return evaluate(state, 0.0, false).objective; }

ConstraintResidual constraint_residual(const ModelState& state) {
    const Matrix s = state.stacked_hidden();
    ConstraintResidual r;
    r.c = matmul_transposed(s, s);
    for (std::size_t i = 0; i < r.c.rows(); ++i) r.c(i, i) -= 1.0;
    r.norm = frobenius_norm(r.c);
    return r;
}

double penalty(const ModelState& state, double mu) {
    if (!(mu > 0.0)) throw InvalidArgument("penalty parameter mu must be positive");
    return evaluate(state, mu, false).penalty;
}

PenaltyGradient penalty_gradient(const ModelState& state, double mu) {
    if (!(mu > 0.0)) throw InvalidArgument("penalty parameter mu must be positive");
    return std::move(evaluate(state, mu, true).gradient);
}

Matrix layer_kernel_matrix(const ModelState& state, std::size_t layer) {
    if (layer == 0) return state.k0();
    const Matrix pts = transpose(state.hidden(layer - 1));
    return kernel_matrix(state.config().layers.at(layer).kernel, pts, pts);
}

}  // namespace drkm
