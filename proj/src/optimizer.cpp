#include "drkm/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "drkm/error.hpp"
#include "drkm/kernels.hpp"
#include "drkm/linalg.hpp"
#include "drkm/random.hpp"

namespace drkm {

void PenaltySchedule::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
    };
    positive(mu0, "mu0");
    positive(tau0, "tau0");
    positive(adam_lr, "adam_lr");
    positive(adam_eps, "adam_eps");
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be greater than 1");
    if (max_outer < 1) throw InvalidArgument("max_outer must be at least 1");
    if (max_inner < 1) throw InvalidArgument("max_inner must be at least 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw InvalidArgument("adam_beta1 must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw InvalidArgument("adam_beta2 must lie in [0, 1)");
}

double PenaltySchedule::mu(std::size_t round) const {
    double m = mu0;
    for (std::size_t k = 0; k < round; ++k) m *= p;
    return m;
}

double PenaltySchedule::tau(std::size_t round) const {
    return std::ldexp(tau0, -static_cast<int>(round));
}

std::size_t default_max_outer(std::size_t n_points) {
    if (n_points <= 100) return 2;
    if (n_points < 200) return 3;
    if (n_points < 400) return 4;
    return 7;
}

std::string_view to_string(StopReason r) noexcept {
    return r == StopReason::GradTol ? "tau" : "max_inner";
}

namespace {

double l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

AdamResult adam_minimize(const GradFn& fn, std::vector<double>& vars, const AdamSettings& s) {
    const std::size_t n = vars.size();
    std::vector<double> g(n), m(n, 0.0), v(n, 0.0);
    double b1t = 1.0, b2t = 1.0;
    AdamResult r;
    for (std::size_t t = 0;; ++t) {
        r.value = fn(vars, g);
        if (!std::isfinite(r.value) || !all_finite(g)) {
            throw DivergenceError("non-finite objective or gradient after " + std::to_string(t) + " steps", 0);
        }
        r.grad_norm = l2(g);
        r.steps = t;
        if (r.grad_norm <= s.grad_tol) {
            r.stop = StopReason::GradTol;
            return r;
        }
        if (t == s.max_steps) {
            r.stop = StopReason::MaxSteps;
            return r;
        }
        b1t *= s.beta1;
        b2t *= s.beta2;
        const double c1 = 1.0 - b1t, c2 = 1.0 - b2t;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
            vars[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
        }
    }
}

std::vector<Matrix> init_random(const ModelConfig& config, std::size_t n_points, std::uint64_t seed) {
    config.validate();
    if (n_points < config.total_components()) {
        throw InfeasibleConstraint("N=" + std::to_string(n_points) + " points cannot carry " +
                                   std::to_string(config.total_components()) + " orthonormal hidden rows");
    }
    std::vector<Matrix> h;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        Rng rng(seed, l);
        Matrix m(config.layers[l].s, n_points);
        for (auto& x : m.values()) x = rng.normal();
        h.push_back(std::move(m));
    }
    return h;
}

std::vector<Matrix> init_layerwise_kpca(const ModelConfig& config, const Matrix& x) {
    config.validate();
    const std::size_t n = x.rows();
    std::vector<Matrix> h;
    Matrix input = x;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        const auto& layer = config.layers[l];
        if (layer.s > n) {
            throw InvalidArgument("layer " + std::to_string(l + 1) + " asks for more components than points");
        }
        const Matrix k = center_kernel_matrix(kernel_matrix(layer.kernel, input, input));
        const auto eig = sym_eig_topk(k, layer.s);
        h.push_back(transpose(eig.vectors));
        input = eig.vectors;  // N x s_l: columns of H as row points
    }
    return h;
}

std::uint64_t fingerprint(std::span<const double> values) {
    return fingerprint(Matrix(1, values.size(), std::vector<double>(values.begin(), values.end())));
}

TrainResult train(ModelState state, const PenaltySchedule& schedule) {
    schedule.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = state.config();
    const std::size_t n = state.n_points();

    std::vector<std::size_t> trainable;
    for (std::size_t l = 0; l < cfg.layers.size(); ++l)
        if (cfg.layers[l].kernel.is_rbf() && cfg.layers[l].kernel.trainable_bandwidth) trainable.push_back(l);

    std::vector<double> vars;
    for (const auto& h : state.hidden()) vars.insert(vars.end(), h.data(), h.data() + h.size());
    const std::size_t n_hidden = vars.size();
    for (std::size_t l : trainable) vars.push_back(std::log(cfg.layers[l].kernel.sigma2));

    auto load = [&](std::span<const double> x) {
        if (!all_finite(x)) throw DivergenceError("non-finite training variables", 0);
        std::vector<Matrix> hs;
        std::size_t off = 0;
        for (const auto& l : cfg.layers) {
            hs.emplace_back(l.s, n, std::vector<double>(x.begin() + off, x.begin() + off + l.s * n));
            off += l.s * n;
        }
        state.set_hidden(std::move(hs));
        for (std::size_t t = 0; t < trainable.size(); ++t) {
            const double s2 = std::exp(x[n_hidden + t]);
            if (!(s2 > 0.0) || !std::isfinite(s2)) throw DivergenceError("bandwidth left the valid range", 0);
            if (s2 != state.config().layers[trainable[t]].kernel.sigma2) state.set_sigma2(trainable[t], s2);
        }
    };

    TrainReport report;
    for (std::size_t k = 0; k < schedule.max_outer; ++k) {
        const double mu = schedule.mu(k);
        RoundRecord rec;
        rec.round = k;
        rec.mu = mu;
        rec.tau = schedule.tau(k);
        rec.start_fingerprint = fingerprint(vars);

        GradFn fn = [&](std::span<const double> x, std::span<double> g) {
            load(x);
            const Evaluation e = evaluate(state, mu, true);
            std::size_t off = 0;
            for (const auto& h : e.gradient.hidden) {
                std::copy(h.data(), h.data() + h.size(), g.begin() + off);
                off += h.size();
            }
            for (std::size_t l : trainable) g[off++] = e.gradient.log_sigma2[l];
            return e.penalty;
        };
        AdamSettings as{schedule.adam_lr, schedule.adam_beta1, schedule.adam_beta2,
                        schedule.adam_eps, schedule.max_inner, rec.tau};
        AdamResult ar;
        try {
            ar = adam_minimize(fn, vars, as);
        } catch (const DivergenceError& e) {
            std::string what = e.what();
            what = what.substr(0, what.rfind(" (outer round"));
            throw DivergenceError(what, k);
        }
        load(vars);
        const Evaluation e = evaluate(state, mu, false);
        rec.steps = ar.steps;
        rec.stop = ar.stop;
        rec.grad_norm = ar.grad_norm;
        rec.objective = e.objective;
        rec.residual = e.residual;
        rec.penalty = e.penalty;
        rec.end_fingerprint = fingerprint(vars);
        report.rounds.push_back(rec);
    }
    report.converged = !report.rounds.empty() && report.rounds.back().stop == StopReason::GradTol;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(state), std::move(report)};
}

}  // namespace drkm
