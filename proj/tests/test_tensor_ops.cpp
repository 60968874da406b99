#include <cmath>
#include <vector>

#include "doctest.h"

#include "dywave/nn.hpp"
#include "dywave/ops.hpp"
#include "dywave/rng.hpp"
#include "dywave/tensor.hpp"
#include "test_support.hpp"

using namespace dywave;

namespace {

Var cv(std::vector<std::size_t> shape, std::vector<double> data) {
    return Var::constant(Tensor(std::move(shape), std::move(data)));
}

} // namespace

TEST_CASE("tensor shape bookkeeping and error paths") {
    Tensor t({2, 3});
    CHECK_EQ(t.numel(), 6);
    CHECK_EQ(t.rows(), 2);
    CHECK_EQ(t.cols(), 3);
    t.at2(1, 2) = 5.0;
    CHECK_EQ(t[5], 5.0);
    CHECK_EQ(t.shape_str(), "[2x3]");

    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({0}), std::invalid_argument);
    CHECK_THROWS_AS(t.dim(2), std::out_of_range);

    Tensor f = Tensor::full({4}, 2.5);
    for (std::size_t i = 0; i < 4; ++i) CHECK_EQ(f[i], 2.5);
    CHECK_EQ(Tensor::scalar(3.0).numel(), 1);
}

TEST_CASE("conv1d zero and identity kernels") {
    Var x0 = cv({1, 4}, {0, 0, 0, 0});
    Var w = cv({1, 1, 3}, {0.3, -1.0, 2.0});
    Tensor y0 = ops::conv1d(x0, w).value();
    CHECK_EQ(ts::max_abs(y0), 0.0);

    Var x = cv({1, 3}, {1, 2, 3});
    Var id = cv({1, 1, 1}, {1.0});
    Tensor y = ops::conv1d(x, id).value();
    CHECK_EQ(y[0], 1.0);
    CHECK_EQ(y[1], 2.0);
    CHECK_EQ(y[2], 3.0);
}

TEST_CASE("conv1d matches the hand-evaluated padded sum") {
    // k=2 pads on the left, so each output mixes the current and previous step
    Var x = cv({1, 4}, {1, 2, 3, 4});
    Var w = cv({1, 1, 2}, {0.5, 0.5});
    Tensor y = ops::conv1d(x, w).value();
    const double want[] = {0.5, 1.5, 2.5, 3.5};
    for (std::size_t t = 0; t < 4; ++t) CHECK_EQ(y[t], doctest::Approx(want[t]).epsilon(0));
}

TEST_CASE("conv1d rejects mismatched channel counts") {
    Var x = cv({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    Var w = cv({1, 1, 3}, {1, 1, 1});
    CHECK_THROWS_AS(ops::conv1d(x, w), std::invalid_argument);
}

TEST_CASE("conv1d_transpose scatters strided copies") {
    Var x0 = cv({1, 3}, {0, 0, 0});
    Var w = cv({1, 1, 2}, {1.0, 0.0});
    CHECK_EQ(ts::max_abs(ops::conv1d_transpose(x0, w, 2).value()), 0.0);

    // stride 2, kernel [1,0]: inputs land at even slots, odd slots stay empty
    Var x = cv({1, 2}, {3.0, 7.0});
    Tensor y = ops::conv1d_transpose(x, w, 2).value();
    REQUIRE_EQ(y.cols(), 4);
    CHECK_EQ(y[0], 3.0);
    CHECK_EQ(y[1], 0.0);
    CHECK_EQ(y[2], 7.0);
    CHECK_EQ(y[3], 0.0);
}

TEST_CASE("resample identity, interpolation, and bin means") {
    Var a = cv({1, 3}, {1, 2, 3});
    Tensor ya = ops::resample(a, 3).value();
    CHECK_EQ(ya[0], 1.0);
    CHECK_EQ(ya[1], 2.0);
    CHECK_EQ(ya[2], 3.0);

    Var b = cv({1, 2}, {0, 2});
    Tensor yb = ops::resample(b, 3).value();
    CHECK_EQ(yb[0], doctest::Approx(0.0));
    CHECK_EQ(yb[1], doctest::Approx(1.0));
    CHECK_EQ(yb[2], doctest::Approx(2.0));

    Var c = cv({1, 4}, {1, 2, 3, 4});
    Tensor yc = ops::resample(c, 2).value();
    CHECK_EQ(yc[0], doctest::Approx(1.5));
    CHECK_EQ(yc[1], doctest::Approx(3.5));
}

TEST_CASE("avg_pool1d window means including the short tail") {
    Var x = cv({1, 4}, {1, 2, 3, 4});
    Tensor y1 = ops::avg_pool1d(x, 1).value();
    for (std::size_t i = 0; i < 4; ++i) CHECK_EQ(y1[i], static_cast<double>(i + 1));

    Tensor y2 = ops::avg_pool1d(x, 2).value();
    REQUIRE_EQ(y2.cols(), 2);
    CHECK_EQ(y2[0], doctest::Approx(1.5));
    CHECK_EQ(y2[1], doctest::Approx(3.5));

    Var odd = cv({1, 3}, {1, 2, 3});
    Tensor y3 = ops::avg_pool1d(odd, 2).value();
    REQUIRE_EQ(y3.cols(), 2);
    CHECK_EQ(y3[0], doctest::Approx(1.5));
    CHECK_EQ(y3[1], doctest::Approx(3.0));
}

TEST_CASE("cosine similarity axes and the degenerate guard") {
    auto cos = [](std::vector<double> u, std::vector<double> v) {
        return ops::cosine_similarity(Var::constant(Tensor::vector(std::move(u))),
                                      Var::constant(Tensor::vector(std::move(v))))
            .value()[0];
    };
    CHECK_EQ(cos({1, 0}, {1, 0}), doctest::Approx(1.0));
    CHECK_EQ(cos({1, 0}, {0, 1}), doctest::Approx(0.0));
    CHECK_EQ(cos({1, 1}, {1, -1}), doctest::Approx(0.0));
    CHECK_EQ(cos({0, 0}, {0, 0}), 0.0);

    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        Tensor u = rng.normal_tensor({6});
        Tensor v = rng.normal_tensor({6});
        double c = ops::cosine_similarity(Var::constant(u), Var::constant(v)).value()[0];
        CHECK_GE(c, -1.0 - 1e-9);
        CHECK_LE(c, 1.0 + 1e-9);
    }
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(5);
    Tensor x = rng.normal_tensor({7, 9}, 0.0, 3.0);
    Tensor y = ops::softmax_rows(Var::constant(x)).value();
    for (std::size_t r = 0; r < 7; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 9; ++c) {
            CHECK_GT(y.at2(r, c), 0.0);
            s += y.at2(r, c);
        }
        CHECK_EQ(s, doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("layernorm rows normalize mean and variance") {
    Rng rng(6);
    std::size_t T = 4, d = 16;
    Tensor x = rng.normal_tensor({T, d}, 2.0, 3.0);
    Var gamma = Var::constant(Tensor::full({d}, 1.0));
    Var beta = Var::constant(Tensor::zeros({d}));
    Tensor y = ops::layernorm_rows(Var::constant(x), gamma, beta).value();
    for (std::size_t r = 0; r < T; ++r) {
        double m = 0.0, v = 0.0;
        for (std::size_t c = 0; c < d; ++c) m += y.at2(r, c);
        m /= static_cast<double>(d);
        for (std::size_t c = 0; c < d; ++c) {
            double e = y.at2(r, c) - m;
            v += e * e;
        }
        v /= static_cast<double>(d);
        CHECK_EQ(m, doctest::Approx(0.0).epsilon(1e-9));
        CHECK_EQ(v, doctest::Approx(1.0).epsilon(1e-3)); // eps in the denominator
    }
}

TEST_CASE("matmul family agrees with naive triple loops") {
    Rng rng(7);
    std::size_t m = 5, k = 9, n = 6;
    Tensor A = rng.normal_tensor({m, k});
    Tensor B = rng.normal_tensor({k, n});
    Tensor Bt = rng.normal_tensor({n, k});

    Tensor C = ops::matmul(Var::constant(A), Var::constant(B)).value();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += A.at2(i, p) * B.at2(p, j);
            CHECK_EQ(C.at2(i, j), doctest::Approx(s).epsilon(1e-12));
        }

    Tensor Cnt = ops::matmul_nt(Var::constant(A), Var::constant(Bt)).value();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += A.at2(i, p) * Bt.at2(j, p);
            CHECK_EQ(Cnt.at2(i, j), doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("affine ops equal their unfused compositions") {
    Rng rng(8);
    std::size_t T = 6, k = 10, n = 7;
    Var X = Var::constant(rng.normal_tensor({T, k}));
    Var W = Var::constant(rng.normal_tensor({n, k}));
    Var b = Var::constant(rng.normal_tensor({n}));
    Tensor fused = ops::affine_nt(X, W, b).value();
    Tensor ref = ops::add_rowvec(ops::matmul_nt(X, W), b).value();
    CHECK_LT(ts::max_abs_diff(fused, ref), 1e-12);

    Var Wf = Var::constant(rng.normal_tensor({n, k}));
    Var Xf = Var::constant(rng.normal_tensor({k, T}));
    Var bf = Var::constant(rng.normal_tensor({n}));
    Tensor fused2 = ops::affine_feat(Wf, Xf, bf).value();
    Tensor ref2 = ops::add_colvec(ops::matmul(Wf, Xf), bf).value();
    CHECK_LT(ts::max_abs_diff(fused2, ref2), 1e-12);
}

TEST_CASE("mha equals the sliced softmax-attention composition") {
    Rng rng(9);
    std::size_t T = 5, d = 8, heads = 2, dh = d / heads;
    Var Q = Var::constant(rng.normal_tensor({T, d}));
    Var K = Var::constant(rng.normal_tensor({T, d}));
    Var V = Var::constant(rng.normal_tensor({T, d}));

    Tensor got = ops::mha(Q, K, V, heads).value();

    std::vector<Var> per_head;
    for (std::size_t h = 0; h < heads; ++h) {
        Var qh = ops::slice_cols(Q, h * dh, (h + 1) * dh);
        Var kh = ops::slice_cols(K, h * dh, (h + 1) * dh);
        Var vh = ops::slice_cols(V, h * dh, (h + 1) * dh);
        Var scores = ops::scale(ops::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
        per_head.push_back(ops::matmul(ops::softmax_rows(scores), vh));
    }
    Tensor ref = ops::concat_cols(per_head).value();
    CHECK_LT(ts::max_abs_diff(got, ref), 1e-12);

    CHECK_THROWS_AS(ops::mha(Q, K, V, 3), std::invalid_argument);
}

TEST_CASE("attention block handles a single token and keeps shape") {
    std::size_t d = 8;
    ParamStore ps;
    Rng rng(10);
    nn::register_attention_block(ps, "blk", d, 2 * d, rng);
    ParamLeaves pl(ps, false);

    Var one = Var::constant(rng.normal_tensor({1, d}));
    Tensor y1 = nn::attention_block(one, pl, "blk", 2).value();
    REQUIRE_EQ(y1.rows(), 1);
    REQUIRE_EQ(y1.cols(), d);
    for (std::size_t i = 0; i < y1.numel(); ++i) CHECK(std::isfinite(y1[i]));

    Var three = Var::constant(rng.normal_tensor({3, d}));
    Tensor y3 = nn::attention_block(three, pl, "blk", 2).value();
    CHECK_EQ(y3.rows(), 3);
    CHECK_EQ(y3.cols(), d);
}

TEST_CASE("slice and concat are mutual inverses") {
    Rng rng(12);
    Tensor x = rng.normal_tensor({6, 8});
    Var v = Var::constant(x);

    Tensor rows = ops::concat_rows({ops::slice_rows(v, 0, 2), ops::slice_rows(v, 2, 6)}).value();
    CHECK_EQ(ts::max_abs_diff(rows, x), 0.0);

    Tensor cols = ops::concat_cols({ops::slice_cols(v, 0, 3), ops::slice_cols(v, 3, 8)}).value();
    CHECK_EQ(ts::max_abs_diff(cols, x), 0.0);

    Tensor tt = ops::transpose(ops::transpose(v)).value();
    CHECK_EQ(ts::max_abs_diff(tt, x), 0.0);
}

TEST_CASE("gather_cols picks columns in order, duplicates allowed") {
    Var v = cv({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor g = ops::gather_cols(v, {2, 0, 2}).value();
    REQUIRE_EQ(g.cols(), 3);
    CHECK_EQ(g.at2(0, 0), 3.0);
    CHECK_EQ(g.at2(0, 1), 1.0);
    CHECK_EQ(g.at2(0, 2), 3.0);
    CHECK_EQ(g.at2(1, 0), 6.0);
    CHECK_EQ(g.at2(1, 2), 6.0);
}

TEST_CASE("gelu matches the error-function form") {
    auto ref = [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); };
    Var x = cv({1, 5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
    Tensor y = ops::gelu(x).value();
    const double xs[] = {-2.0, -0.5, 0.0, 0.5, 2.0};
    for (std::size_t i = 0; i < 5; ++i) CHECK_EQ(y[i], doctest::Approx(ref(xs[i])).epsilon(1e-12));
    CHECK_EQ(y[2], 0.0);
}

TEST_CASE("losses evaluate to their closed forms") {
    // cross entropy: -log softmax[label]
    Var logits = cv({1, 3}, {1.0, 2.0, 0.5});
    double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5);
    double want = -std::log(std::exp(2.0) / z);
    CHECK_EQ(ops::cross_entropy_logits(logits, 1).value()[0], doctest::Approx(want).epsilon(1e-12));

    Var a = cv({2, 2}, {1, 2, 3, 4});
    Var b = cv({2, 2}, {1, 0, 3, 2});
    CHECK_EQ(ops::mse(a, b).value()[0], doctest::Approx((0.0 + 4.0 + 0.0 + 4.0) / 4.0));
}

TEST_CASE("adjacent cosine gap pins the first step to zero") {
    Rng rng(13);
    std::size_t d = 6, L = 9;
    Tensor k = rng.normal_tensor({d, L});
    Tensor q = rng.normal_tensor({d, L});
    Tensor P = ops::adjacent_cosine_gap(Var::constant(k), Var::constant(q)).value();
    REQUIRE_EQ(P.numel(), L);
    CHECK_EQ(P[0], 0.0);
    for (std::size_t t = 1; t < L; ++t) {
        CHECK_GE(P[t], -1e-9);
        CHECK_LE(P[t], 2.0 + 1e-9);
    }

    // identical columns in both streams cancel the gap entirely
    Tensor same({d, L});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t t = 0; t < L; ++t) same.at2(i, t) = std::sin(double(i) + 1.0);
    Tensor P0 = ops::adjacent_cosine_gap(Var::constant(same), Var::constant(same)).value();
    for (std::size_t t = 0; t < L; ++t) CHECK_EQ(P0[t], doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("forward evaluation is deterministic within a process") {
    Rng rng(14);
    Tensor x = rng.normal_tensor({3, 32});
    Tensor w = rng.normal_tensor({4, 3, 5});
    Tensor b = rng.normal_tensor({4});
    Tensor y1 = ops::conv1d(Var::constant(x), Var::constant(w), Var::constant(b)).value();
    Tensor y2 = ops::conv1d(Var::constant(x), Var::constant(w), Var::constant(b)).value();
    for (std::size_t i = 0; i < y1.numel(); ++i) CHECK_EQ(y1[i], y2[i]);
}
