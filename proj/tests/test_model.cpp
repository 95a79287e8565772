#include "doctest.h"

#include <cmath>
#include <numeric>

#include "drkm/error.hpp"
#include "drkm/linalg.hpp"
#include "drkm/model.hpp"
#include "drkm/random.hpp"
#include "oracles/gradient_check.hpp"
#include "oracles/naive.hpp"

using namespace drkm;

namespace {

ModelConfig one_layer(std::size_t s, KernelSpec k, double eta = 1.0, double lambda = 1.0) {
    return ModelConfig{{LayerConfig{s, eta, lambda, k}}};
}

}  // namespace

TEST_CASE("objective: zero hidden features") {
    const Matrix x = oracle::random_matrix(5, 2, 1);
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.5)}, LayerConfig{1, 1, 1, KernelSpec::rbf(0.5)}}};
    ModelState st(cfg, x, {Matrix(2, 5), Matrix(1, 5)});
    CHECK(objective(st) == 0.0);
}

TEST_CASE("objective: single point RBF cancels") {
    for (double h : {0.0, 0.7, -2.5}) {
        ModelState st(one_layer(1, KernelSpec::rbf(1.0)), Matrix{{0.2, 0.4}}, {Matrix{{h}}});
        CHECK(objective(st) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("objective: linear kernel on identity data") {
    // K = I_2, H = (a, b), eta = 2, lambda = 3: -(a^2+b^2)/4 + 3(a^2+b^2)/2.
    const double a = 0.6, b = -1.1;
    ModelState st(one_layer(1, KernelSpec::linear(), 2.0, 3.0), Matrix::identity(2), {Matrix{{a, b}}});
    const double n2 = a * a + b * b;
    CHECK(objective(st) == doctest::Approx(-n2 / 4 + 1.5 * n2).epsilon(1e-14));
}

TEST_CASE("objective matches naive loops for a two-layer stack") {
    const Matrix x = oracle::random_matrix(9, 2, 3);
    ModelConfig cfg{{LayerConfig{2, 0.7, 1.3, KernelSpec::rbf(0.8)}, LayerConfig{1, 2.0, 0.4, KernelSpec::rbf(0.3)}}};
    const Matrix h1 = oracle::random_matrix(2, 9, 4, 0.5);
    const Matrix h2 = oracle::random_matrix(1, 9, 5, 0.5);
    ModelState st(cfg, x, {h1, h2});
    Matrix k0(9, 9), k1(9, 9);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            double dx = 0, dh = 0;
            for (std::size_t c = 0; c < 2; ++c) dx += std::pow(x(i, c) - x(j, c), 2);
            for (std::size_t c = 0; c < 2; ++c) dh += std::pow(h1(c, i) - h1(c, j), 2);
            k0(i, j) = std::exp(-dx / 1.6);
            k1(i, j) = std::exp(-dh / 0.6);
        }
    const double ref = oracle::naive_layer_objective(h1, k0, 0.7, 1.3) +
                       oracle::naive_layer_objective(h2, k1, 2.0, 0.4);
    CHECK(objective(st) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("constraint residual analytic cases") {
    const std::size_t n = 6;
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(1)}, LayerConfig{1, 1, 1, KernelSpec::rbf(1)}}};
    const Matrix x = oracle::random_matrix(n, 2, 6);
    Matrix h1(2, n), h2(1, n);
    h1(0, 0) = 1;
    h1(1, 1) = 1;
    h2(0, 2) = 1;
    ModelState st(cfg, x, {h1, h2});
    const auto r = constraint_residual(st);
    CHECK(r.norm == 0.0);
    CHECK(penalty(st, 3.0) == objective(st));

    for (auto* m : {&h1, &h2})
        for (auto& v : m->values()) v *= 2.0;
    st.set_hidden({h1, h2});
    const auto r2 = constraint_residual(st);
    CHECK(r2.norm == doctest::Approx(3.0 * std::sqrt(3.0)).epsilon(1e-15));
    CHECK(oracle::max_abs_diff(r2.c, Matrix{{3, 0, 0}, {0, 3, 0}, {0, 0, 3}}) == 0.0);
    CHECK(r2.block_norm(cfg, 0, 0) == doctest::Approx(3.0 * std::sqrt(2.0)));
    CHECK(r2.block_norm(cfg, 0, 1) == 0.0);
}

TEST_CASE("constraint residual matches naive loop on random H") {
    const std::size_t n = 8;
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(1)}, LayerConfig{3, 1, 1, KernelSpec::linear()}}};
    const Matrix h1 = oracle::random_matrix(2, n, 10), h2 = oracle::random_matrix(3, n, 11);
    ModelState st(cfg, oracle::random_matrix(n, 2, 12), {h1, h2});
    const Matrix s = st.stacked_hidden();
    const auto r = constraint_residual(st);
    double norm2 = 0.0;
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            double v = 0;
            for (std::size_t i = 0; i < n; ++i) v += s(a, i) * s(b, i);
            v -= (a == b);
            CHECK(std::abs(r.c(a, b) - v) < 1e-13);
            norm2 += v * v;
        }
    CHECK(r.norm == doctest::Approx(std::sqrt(norm2)).epsilon(1e-13));
    const double mu = 8.0;
    CHECK(penalty(st, mu) == doctest::Approx(objective(st) + 4.0 * r.norm * r.norm).epsilon(1e-13));
    CHECK(evaluate(st, mu, false).residual == doctest::Approx(r.norm).epsilon(1e-13));
}

TEST_CASE("penalty at H = 0 is mu/2 sum s") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(1)}, LayerConfig{2, 1, 1, KernelSpec::rbf(1)},
                     LayerConfig{6, 1, 1, KernelSpec::rbf(1)}}};
    ModelState st(cfg, oracle::random_matrix(12, 2, 1), {Matrix(2, 12), Matrix(2, 12), Matrix(6, 12)});
    CHECK(penalty(st, 5.0) == doctest::Approx(2.5 * 10));
    CHECK_THROWS_AS(penalty(st, 0.0), InvalidArgument);
}

TEST_CASE("gradient vanishes at the origin for a linear layer") {
    ModelState st(one_layer(2, KernelSpec::linear()), oracle::random_matrix(5, 3, 2), {Matrix(2, 5)});
    const auto g = penalty_gradient(st, 10.0);
    CHECK(g.norm() == 0.0);
}

TEST_CASE("single linear layer gradient closed form on 2x2") {
    // H 1x2 = (a, b), K = X X^T, grad = -(1/eta) H K + lambda H + 2 mu (H H^T - 1) H.
    const Matrix x{{1.0, 0.5}, {-0.3, 2.0}};
    const double a = 0.4, b = -0.9, eta = 1.5, lambda = 0.7, mu = 3.0;
    ModelState st(one_layer(1, KernelSpec::linear(), eta, lambda), x, {Matrix{{a, b}}});
    const double k00 = 1.25, k01 = -0.3 + 1.0, k11 = 0.09 + 4.0;
    const double c = a * a + b * b - 1.0;
    const double ga = -(a * k00 + b * k01) / eta + lambda * a + 2 * mu * c * a;
    const double gb = -(a * k01 + b * k11) / eta + lambda * b + 2 * mu * c * b;
    const auto g = penalty_gradient(st, mu);
    CHECK(g.hidden[0](0, 0) == doctest::Approx(ga).epsilon(1e-14));
    CHECK(g.hidden[0](0, 1) == doctest::Approx(gb).epsilon(1e-14));
}

TEST_CASE("analytic gradient matches central finite differences") {
    struct Case {
        const char* name;
        ModelConfig cfg;
    };
    const std::vector<Case> cases = {
        {"1 layer linear", one_layer(2, KernelSpec::linear(), 0.8, 1.2)},
        {"1 layer rbf", one_layer(2, KernelSpec::rbf(0.6))},
        {"1 layer rbf trainable", one_layer(2, KernelSpec::rbf(0.6, true), 1.3, 0.5)},
        {"2 layers rbf/rbf", {{LayerConfig{2, 1, 1, KernelSpec::rbf(0.7)}, LayerConfig{1, 0.6, 1.4, KernelSpec::rbf(0.4)}}}},
        {"2 layers rbf/linear", {{LayerConfig{2, 1, 1, KernelSpec::rbf(0.7)}, LayerConfig{2, 1.1, 0.9, KernelSpec::linear()}}}},
        {"3 layers trainable", {{LayerConfig{2, 1, 1, KernelSpec::rbf(0.9, true)},
                                 LayerConfig{2, 0.7, 1, KernelSpec::rbf(0.5, true)},
                                 LayerConfig{1, 1.2, 0.8, KernelSpec::rbf(0.3, true)}}}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        for (std::uint64_t rep = 0; rep < 10; ++rep) {
            const auto worst = oracle::gradient_check(c.cfg, 7, 2, 100 + rep, /*mu=*/2.5);
            CHECK(worst < 1e-5);
        }
    }
}

TEST_CASE("objective depends on eta and lambda only through 1/(2 eta) and lambda/2") {
    const Matrix x = oracle::random_matrix(6, 2, 13);
    const Matrix h = oracle::random_matrix(2, 6, 14);
    ModelState a(one_layer(2, KernelSpec::rbf(0.5), 2.0, 3.0), x, {h});
    ModelState b(one_layer(2, KernelSpec::rbf(0.5), 1.0, 1.0), x, {h});
    const Matrix k = a.k0();
    double tr = 0;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) tr += k(i, j) * (h(0, i) * h(0, j) + h(1, i) * h(1, j));
    const double hh = frobenius_norm(h) * frobenius_norm(h);
    CHECK(objective(a) == doctest::Approx(-tr / 4.0 + 1.5 * hh).epsilon(1e-13));
    CHECK(objective(b) == doctest::Approx(-tr / 2.0 + 0.5 * hh).epsilon(1e-13));
}

TEST_CASE("penalty dominates the objective") {
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.7)}, LayerConfig{1, 1, 1, KernelSpec::rbf(0.4)}}};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ModelState st(cfg, oracle::random_matrix(8, 2, seed), {oracle::random_matrix(2, 8, seed + 50),
                                                               oracle::random_matrix(1, 8, seed + 60)});
        CHECK(penalty(st, 1.0) > objective(st));
    }
}

TEST_CASE("objective is invariant under relabeling the training points") {
    const std::size_t n = 10;
    ModelConfig cfg{{LayerConfig{2, 1, 1, KernelSpec::rbf(0.7)}, LayerConfig{2, 1, 1, KernelSpec::rbf(0.4)}}};
    const Matrix x = oracle::random_matrix(n, 2, 31);
    const Matrix h1 = oracle::random_matrix(2, n, 32), h2 = oracle::random_matrix(2, n, 33);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(9);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Matrix xp(n, 2), h1p(2, n), h2p(2, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            xp(i, c) = x(perm[i], c);
            h1p(c, i) = h1(c, perm[i]);
            h2p(c, i) = h2(c, perm[i]);
        }
    }
    ModelState a(cfg, x, {h1, h2}), b(cfg, xp, {h1p, h2p});
    CHECK(objective(a) == doctest::Approx(objective(b)).epsilon(1e-12));
}

TEST_CASE("model state validation") {
    const Matrix x = oracle::random_matrix(4, 2, 1);
    CHECK_THROWS_AS(ModelState(one_layer(2, KernelSpec::rbf(1)), x, {Matrix(1, 4)}), InvalidArgument);
    CHECK_THROWS_AS(ModelState(one_layer(2, KernelSpec::rbf(1)), x, {}), InvalidArgument);
    CHECK_THROWS_AS(ModelState(ModelConfig{}, x, {}), InvalidArgument);
    CHECK_THROWS_AS(ModelState(one_layer(1, KernelSpec::rbf(1), 0.0), x, {Matrix(1, 4)}), InvalidArgument);
    ModelState st(one_layer(1, KernelSpec::rbf(1)), x, {Matrix(1, 4)});
    st.set_sigma2(0, 0.25);
    CHECK(st.k0() == kernel_matrix(KernelSpec::rbf(0.25), x, x));
    CHECK_THROWS_AS(st.set_sigma2(0, -1.0), InvalidArgument);
}
