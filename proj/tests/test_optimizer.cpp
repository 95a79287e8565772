#include "doctest.h"

#include <cmath>

#include "drkm/error.hpp"
#include "drkm/kernels.hpp"
#include "drkm/linalg.hpp"
#include "drkm/optimizer.hpp"
#include "oracles/naive.hpp"

using namespace drkm;

namespace {

double quadratic(std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        f += x[i] * x[i];
        g[i] = 2.0 * x[i];
    }
    return f;
}

}  // namespace

TEST_CASE("adam: single step on x^2 by hand") {
    // m1 = 0.2, v1 = 0.004; bias-corrected m = 2, v = 4; step = lr * 2 / (2 + eps).
    std::vector<double> x{1.0};
    AdamSettings s;
    s.max_steps = 1;
    const auto r = adam_minimize(quadratic, x, s);
    CHECK(r.steps == 1);
    CHECK(r.stop == StopReason::MaxSteps);
    CHECK(x[0] == doctest::Approx(1.0 - 1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("adam: converges on x^2") {
    std::vector<double> x{1.0};
    AdamSettings s;
    s.max_steps = 10000;
    adam_minimize(quadratic, x, s);
    CHECK(std::abs(x[0]) < 1e-3);
}

TEST_CASE("adam: zero gradient leaves variables untouched") {
    std::vector<double> x{0.3, -2.0, 5.0};
    const auto before = x;
    AdamSettings s;
    s.max_steps = 50;
    const auto r = adam_minimize([](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        return 1.0;
    }, x, s);
    CHECK(x == before);
    CHECK(r.steps == 0);
    CHECK(r.stop == StopReason::GradTol);
}

TEST_CASE("adam: gradient tolerance stops early, NaN diverges") {
    std::vector<double> x{1.0};
    AdamSettings s;
    s.max_steps = 100000;
    s.lr = 1e-2;
    s.grad_tol = 1e-1;
    const auto r = adam_minimize(quadratic, x, s);
    CHECK(r.stop == StopReason::GradTol);
    CHECK(r.grad_norm <= 1e-1);
    CHECK(r.steps < 100000);
    std::vector<double> y{1.0};
    CHECK_THROWS_AS(adam_minimize([](std::span<const double>, std::span<double> g) {
        g[0] = std::nan("");
        return 0.0;
    }, y, s), DivergenceError);
}

TEST_CASE("schedule defaults and sequences") {
    const PenaltySchedule s;
    CHECK(s.mu0 == 1.0);
    CHECK(s.tau0 == 0.1);
    CHECK(s.p == 8.0);
    CHECK(s.adam_lr == 1e-3);
    CHECK(s.max_inner == 500);
    CHECK(s.adam_beta1 == 0.9);
    CHECK(s.adam_beta2 == 0.999);
    CHECK(s.adam_eps == 1e-8);
    CHECK(s.mu(0) == 1.0);
    CHECK(s.mu(3) == 512.0);
    CHECK(s.tau(2) == 0.025);
    PenaltySchedule bad;
    bad.p = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.tau0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("default outer-round counts") {
    CHECK(default_max_outer(50) == 2);
    CHECK(default_max_outer(100) == 2);
    CHECK(default_max_outer(200) == 4);
    CHECK(default_max_outer(400) == 7);
    CHECK(default_max_outer(800) == 7);
    CHECK(default_max_outer(10) == 2);
    CHECK(default_max_outer(150) == 3);
    CHECK(default_max_outer(3000) == 7);
    for (std::size_t n = 101; n < 3000; n += 37) {
        const double formula = std::min(7.0, 2.0 + std::ceil(std::log2(n / 100.0)));
        CHECK(default_max_outer(n) >= formula);
    }
}

TEST_CASE("init_random: determinism, moments, feasibility") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(1)}, LayerConfig{1, 1, 1, KernelSpec::rbf(1)}}};
    const auto a = init_random(cfg, 50000, 17);
    const auto b = init_random(cfg, 50000, 17);
    CHECK(a == b);
    CHECK(a != init_random(cfg, 50000, 18));
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (const auto& h : a)
        for (double v : h.values()) {
            sum += v;
            sq += v * v;
            ++n;
        }
    const double mean = sum / n, var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));

    ModelConfig big{{LayerConfig{2, 1, 1, KernelSpec::rbf(1)}, LayerConfig{2, 1, 1, KernelSpec::rbf(1)},
                     LayerConfig{6, 1, 1, KernelSpec::rbf(1)}}};
    CHECK_THROWS_AS(init_random(big, 4, 1), InfeasibleConstraint);
    CHECK_NOTHROW(init_random(big, 10, 1));
}

TEST_CASE("init_layerwise_kpca on rows of I_3 with a linear kernel") {
    // Centered I_3 = I - 11^T/3 has eigenvalue 1 on the plane orthogonal to 1.
    ModelConfig cfg{{LayerConfig{1, 1, 1, KernelSpec::linear()}}};
    const auto h = init_layerwise_kpca(cfg, Matrix::identity(3));
    const Matrix& v = h[0];
    CHECK(std::abs(v(0, 0) + v(0, 1) + v(0, 2)) < 1e-12);
    CHECK(std::abs(v(0, 0) * v(0, 0) + v(0, 1) * v(0, 1) + v(0, 2) * v(0, 2) - 1.0) < 1e-12);
    double best = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < 3; ++i)
        if (std::abs(v(0, i)) > best + 1e-12) best = std::abs(v(0, i)), arg = i;
    CHECK(v(0, arg) > 0);
    CHECK(init_layerwise_kpca(cfg, Matrix::identity(3)) == h);
}

TEST_CASE("init_layerwise_kpca: per-layer orthonormality, determinism") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.5)}, LayerConfig{1, 1, 1, KernelSpec::rbf(0.05)}}};
    const Matrix x = oracle::random_matrix(60, 2, 5);
    const auto h = init_layerwise_kpca(cfg, x);
    for (const auto& m : h) {
        const Matrix g = matmul_transposed(m, m);
        CHECK(oracle::max_abs_diff(g, Matrix::identity(m.rows())) < 1e-8);
    }
    CHECK(init_layerwise_kpca(cfg, x) == h);
    // Layer 2 equals kernel PCA on the layer-1 codes.
    const Matrix k1 = center_kernel_matrix(kernel_matrix(cfg.layers[1].kernel, transpose(h[0]), transpose(h[0])));
    const auto e = sym_eig_topk(k1, 1);
    for (std::size_t i = 0; i < 60; ++i) CHECK(h[1](0, i) == e.vectors(i, 0));
}

TEST_CASE("train: schedule recorded, warm start, determinism") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.3)}, LayerConfig{1, 1, 1, KernelSpec::rbf(0.02)}}};
    const Matrix x = oracle::random_matrix(40, 2, 9, 0.5);
    PenaltySchedule sched;
    sched.max_outer = 4;
    sched.max_inner = 60;
    ModelState st(cfg, x, init_layerwise_kpca(cfg, x));
    const auto a = train(st, sched);
    const auto b = train(st, sched);
    REQUIRE(a.report.rounds.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& r = a.report.rounds[k];
        CHECK(r.mu == std::pow(8.0, double(k)));
        CHECK(r.tau == 0.1 / std::pow(2.0, double(k)));
        if (k > 0) CHECK(r.start_fingerprint == a.report.rounds[k - 1].end_fingerprint);
        CHECK(r.steps <= 60);
        CHECK(std::isfinite(r.penalty));
        CHECK(r.end_fingerprint == b.report.rounds[k].end_fingerprint);
        CHECK(r.objective == b.report.rounds[k].objective);
    }
    CHECK(a.state.hidden() == b.state.hidden());
    CHECK(a.report.rounds.back().residual <= a.report.rounds.front().residual);
}

TEST_CASE("train: degenerate N = sum s linear run decreases Q across every round") {
    // Q(.; mu_k) at the end of round k never exceeds its value at the
    // warm-start point handed over by round k-1.
    ModelConfig cfg{{LayerConfig{1, 1, 1, KernelSpec::linear()}, LayerConfig{1, 1, 1, KernelSpec::linear()}}};
    const Matrix x{{1.0, 0.2}, {0.1, 0.8}};
    ModelState st(cfg, x, {Matrix{{1.0, 0.0}}, Matrix{{0.0, 1.0}}});
    PenaltySchedule sched;
    sched.max_outer = 5;
    ModelState cur = st;
    for (std::size_t k = 0; k < sched.max_outer; ++k) {
        PenaltySchedule one = sched;
        one.mu0 = sched.mu(k);
        one.tau0 = sched.tau(k);
        one.max_outer = 1;
        const double before = penalty(cur, one.mu0);
        auto r = train(cur, one);
        CHECK(r.report.rounds[0].penalty <= before);
        cur = r.state;
    }
    // Same trajectory as one multi-round call.
    const auto full = train(st, sched);
    CHECK(full.state.hidden() == cur.hidden());
}

TEST_CASE("train: trainable bandwidth moves sigma2") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.3, true)}}};
    const Matrix x = oracle::random_matrix(30, 2, 4, 0.5);
    PenaltySchedule sched;
    sched.max_outer = 1;
    sched.max_inner = 20;
    const auto r = train(ModelState(cfg, x, init_layerwise_kpca(cfg, x)), sched);
    CHECK(r.state.config().layers[0].kernel.sigma2 != 0.3);
    CHECK(r.state.k0() == kernel_matrix(r.state.config().layers[0].kernel, x, x));
}
