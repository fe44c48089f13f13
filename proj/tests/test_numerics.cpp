// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "iadapt/error.hpp"
#include "iadapt/grad_check.hpp"
#include "iadapt/params.hpp"
#include "iadapt/seed.hpp"
#include "iadapt/tape.hpp"
#include "iadapt/tensor.hpp"
#include "oracles.hpp"

using namespace iadapt;
using namespace iadapt::num;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.data()) v = d(rng);
    return t;
}

oracle::Matrix to_rows(const Tensor& t) {
    oracle::Matrix m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

void check_close(const Tensor& a, const oracle::Matrix& b, double tol) {
    REQUIRE(a.rows() == b.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a.at(i, j) == doctest::Approx(b[i][j]).epsilon(tol));
}

// Scalar loss sum(w ⊙ f(x)) with fixed random weights, so every output entry
// contributes a distinct gradient.
using UnaryOp = Var (Tape::*)(Var);

void check_unary_gradient(UnaryOp op, Tensor x0, std::mt19937_64& rng) {
    const Tensor w = random_matrix(x0.rows(), x0.cols(), rng);
    auto loss_at = [&](const std::vector<double>& xs) {
        Tape tape;
        const Var x = tape.input(Tensor(x0.shape(), xs), false);
        const Var y = (tape.*op)(x);
        return sum(mul(tape.value(y), w));
    };
    Tape tape;
    const Var x = tape.input(x0, true);
    const Var y = (tape.*op)(x);
    const Var l = tape.sum(tape.mul(y, tape.constant(w)));
    tape.backward(l);
    const Tensor* g = tape.grad_sink(x);
    REQUIRE(g != nullptr);
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double fd = oracle::central_difference(loss_at, x0.values(), i);
        CHECK((*g)[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // namespace

TEST_CASE("matmul variants agree with the triple loop") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng() % 7, k = 1 + rng() % 9, n = 1 + rng() % 6;
        const Tensor a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
        const auto ref = oracle::matmul(to_rows(a), to_rows(b));
        check_close(matmul(a, b), ref, 1e-12);
        check_close(matmul_nt(a, transpose(b)), ref, 1e-12);
        check_close(matmul_tn(transpose(a), b), ref, 1e-12);
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    CHECK_THROWS_AS(matmul(Tensor::matrix(2, 3), Tensor::matrix(4, 2)), Error);
    try {
        matmul(Tensor::matrix(2, 3), Tensor::matrix(4, 2));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shape_mismatch);
    }
}

TEST_CASE("softmax rows are distributions and log_softmax is their log") {
    std::mt19937_64 rng(3);
    Tensor x = random_matrix(5, 7, rng, 10.0);
    x.at(0, 0) = 800.0;  // overflow without max-shift
    const Tensor p = softmax(x), lp = log_softmax(x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            CHECK(p.at(r, c) >= 0.0);
            s += p.at(r, c);
            CHECK(std::isfinite(lp.at(r, c)));
            if (p.at(r, c) > 1e-300) CHECK(std::log(p.at(r, c)) == doctest::Approx(lp.at(r, c)).epsilon(1e-12));
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("softmax is invariant to a per-row shift") {
    std::mt19937_64 rng(5);
    const Tensor x = random_matrix(3, 4, rng);
    Tensor shifted = x;
    for (std::size_t c = 0; c < 4; ++c) shifted.at(1, c) += 123.0;
    const Tensor a = softmax(x), b = softmax(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("logsumexp matches the direct formula and handles large inputs") {
    const std::vector<double> v{0.1, -2.0, 3.5};
    double direct = 0.0;
    for (double x : v) direct += std::exp(x);
    CHECK(logsumexp(v) == doctest::Approx(std::log(direct)).epsilon(1e-14));
    const std::vector<double> big{1000.0, 1000.0};
    CHECK(logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("layer_norm output has zero mean and unit variance per row") {
    std::mt19937_64 rng(8);
    const Tensor y = layer_norm(random_matrix(4, 16, rng, 3.0), kLayerNormEps);
    for (std::size_t r = 0; r < 4; ++r) {
        double mu = 0.0, var = 0.0;
        for (double v : y.row(r)) mu += v;
        mu /= 16;
        for (double v : y.row(r)) var += (v - mu) * (v - mu);
        var /= 16;
        CHECK(std::abs(mu) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("layer_norm of a constant row is zero") {
    const Tensor y = layer_norm(Tensor({2, 5}, 3.25), kLayerNormEps);
    for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("gelu derivative matches finite differences") {
    for (double x = -4.0; x <= 4.0; x += 0.37) {
        const double fd = (gelu_scalar(x + 1e-6) - gelu_scalar(x - 1e-6)) / 2e-6;
        CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("unary tape ops have correct gradients") {
    std::mt19937_64 rng(21);
    const Tensor x = random_matrix(3, 5, rng);
    check_unary_gradient(&Tape::gelu, x, rng);
    check_unary_gradient(&Tape::softmax, x, rng);
    check_unary_gradient(&Tape::log_softmax, x, rng);
    check_unary_gradient(static_cast<UnaryOp>(&Tape::layer_norm), x, rng);
    Tensor shifted = x;  // keep entries away from the kink
    for (double& v : shifted.data()) v += (v >= 0 ? 0.1 : -0.1);
    check_unary_gradient(&Tape::relu, shifted, rng);
}

TEST_CASE("grad_check passes on a small composite graph") {
    std::mt19937_64 rng(4);
    ParamStore store;
    const ParamId w1 = store.add("w1", ParamGroup::downstream_body, random_matrix(4, 6, rng, 0.5), true);
    const ParamId b1 = store.add("b1", ParamGroup::downstream_body, Tensor({6}, 0.1), true);
    const ParamId g = store.add("g", ParamGroup::downstream_body, Tensor({6}, 1.0), true);
    const ParamId be = store.add("be", ParamGroup::downstream_body, Tensor({6}, 0.0), true);
    const ParamId w2 = store.add("w2", ParamGroup::ctc_head, random_matrix(6, 3, rng, 0.5), true);
    const ParamId frozen = store.add("frozen", ParamGroup::backbone, random_matrix(3, 4, rng), false);
    const Tensor x = random_matrix(3, 4, rng);
    auto loss = [&](Tape& tape, const ParamStore& s) {
        Var in = tape.add(tape.input(x, false), s.bind(tape, frozen));
        Var h = tape.gelu(tape.linear(in, s.bind(tape, w1), s.bind(tape, b1)));
        h = tape.layer_norm(h, s.bind(tape, g), s.bind(tape, be));
        Var sc = tape.matmul_nt(h, h);
        Var att = tape.matmul(tape.softmax(tape.scale(sc, 0.5)), h);
        Var parts[2] = {tape.slice_cols(att, 0, 3), tape.slice_cols(h, 3, 6)};
        Var cat = tape.concat_cols(parts);
        Var out = tape.log_softmax(tape.matmul(cat, s.bind(tape, w2)));
        return tape.mean(tape.slice_rows(out, 1, 3));
    };
    const GradCheckReport r = grad_check(store, loss);
    CHECK(r.passed);
    CHECK(r.worst_relative_error < 1e-6);
    CHECK(r.entries_checked == store.count_trainable());
}

TEST_CASE("backward leaves frozen parameters without gradients") {
    ParamStore store;
    const ParamId a = store.add("a", ParamGroup::backbone, Tensor::vector({1.0, 2.0}), false);
    const ParamId b = store.add("b", ParamGroup::adapter, Tensor::vector({3.0, 4.0}), true);
    Tape tape;
    const Var l = tape.sum(tape.mul(store.bind(tape, a), store.bind(tape, b)));
    const GradientMap g = tape.backward(l);
    CHECK(g.count(a) == 0);
    REQUIRE(g.count(b) == 1);
    CHECK(g.at(b)[0] == 1.0);
    CHECK(g.at(b)[1] == 2.0);
}

TEST_CASE("a gradient-disabled tape records no gradient") {
    ParamStore store;
    const ParamId a = store.add("a", ParamGroup::adapter, Tensor::vector({1.0, 2.0}), true);
    Tape tape(false);
    const Var v = store.bind(tape, a);
    CHECK_FALSE(tape.requires_grad(v));
    CHECK(tape.grad_sink(v) == nullptr);
}

TEST_CASE("embedding gradient scatters into the selected rows") {
    Tape tape;
    const Var table = tape.input(Tensor({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6}), true);
    const Var e = tape.embedding(table, {2, 0, 2});
    tape.backward(tape.sum(e));
    const Tensor* g = tape.grad_sink(table);
    REQUIRE(g);
    CHECK(g->values() == std::vector<double>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("hash_bytes distinguishes one-ulp changes") {
    Tensor a = Tensor::vector({1.0, 2.0, 3.0});
    const auto h0 = hash_bytes(a);
    a[1] = std::nextafter(2.0, 3.0);
    CHECK(hash_bytes(a) != h0);
}

TEST_CASE("derive_seed separates tags and indices") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(9, "x", 3) == derive_seed(9, "x", 3));
}
