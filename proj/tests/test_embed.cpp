#include <cmath>

#include "doctest.h"

#include "dywave/embed.hpp"
#include "dywave/modwt.hpp"
#include "dywave/ops.hpp"
#include "dywave/pipeline.hpp"
#include "dywave/rng.hpp"
#include "test_support.hpp"

using namespace dywave;

namespace {

// a small configured model supplies realistically-shaped encoder parameters;
// J=4, K=1 gives a 2-plane detail stream and a 4-plane context stream
Model make_model(std::uint64_t seed, std::size_t J = 4, std::size_t K = 1) {
    ModelConfig mc;
    mc.J = J;
    mc.K = K;
    mc.basis = "haar";
    mc.d_U = 8;
    mc.d_V = 8;
    mc.L_ctx_max = 16;
    mc.heads = 2;
    mc.mlp_hidden = 16;
    mc.n_classes = 3;
    mc.validate();
    Model m(mc);
    m.init_params(seed);
    return m;
}

} // namespace

TEST_CASE("select_stride is the smallest stride fitting the context budget") {
    CHECK_EQ(select_stride(512, 128), 4);
    CHECK_EQ(select_stride(100, 128), 1);
    CHECK_EQ(select_stride(513, 128), 5);
    CHECK_LE((513 + 4) / 5, 128); // ceil(513/5) = 103
    CHECK_EQ(select_stride(1, 1), 1);
    for (std::size_t L = 1; L < 600; L += 37) {
        std::size_t s = select_stride(L, 128);
        CHECK_LE((L + s - 1) / s, 128);
        if (s > 1) CHECK_GT((L + s - 2) / (s - 1), 128); // s-1 would overflow the budget
    }
}

TEST_CASE("detail encoder maps zero streams to zero") {
    Model m = make_model(31);
    ParamLeaves pl(m.params(), false);
    Var zero = Var::constant(Tensor::zeros({2, 40}));
    Tensor out = detail_encode(zero, pl, "detail").value();
    CHECK_EQ(out.dim(0), 8);
    CHECK_EQ(out.dim(1), 40);
    CHECK_EQ(ts::max_abs(out), 0.0); // freshly initialized biases are zero
}

TEST_CASE("detail encoder keeps the time axis for every channel") {
    Model m = make_model(32);
    ParamLeaves pl(m.params(), false);
    Rng rng(0xEE);
    for (std::size_t c = 0; c < 3; ++c) {
        Tensor out = detail_encode(Var::constant(rng.normal_tensor({2, 64})), pl, "detail").value();
        CHECK_EQ(out.dim(0), 8);
        CHECK_EQ(out.dim(1), 64);
    }
}

TEST_CASE("detail encoder commutes with shifts away from the padded edges") {
    Model m = make_model(33);
    ParamLeaves pl(m.params(), false);
    Rng rng(0xEF);
    std::size_t L = 64;
    Tensor X = rng.normal_tensor({2, L});
    Tensor Y = detail_encode(Var::constant(X), pl, "detail").value();
    Tensor Ys = detail_encode(Var::constant(ts::circshift_rows(X, 1)), pl, "detail").value();
    // two kernel-5 layers reach 4 steps each way; stay well inside that
    for (std::size_t t = 8; t + 8 < L; ++t)
        for (std::size_t f = 0; f < 8; ++f)
            CHECK_LT(std::abs(Ys.at2(f, t) - Y.at2(f, t - 1)), 1e-10);
}

TEST_CASE("context encoder keeps shape and collapses to the unpooled path at stride 1") {
    Model m = make_model(34);
    ParamLeaves pl(m.params(), false);
    Rng rng(0xF0);

    Tensor big = rng.normal_tensor({4, 64}); // stride 4 under L_ctx_max=16
    Tensor out = context_encode(Var::constant(big), pl, "ctx", 16, 2).value();
    CHECK_EQ(out.dim(0), 8);
    CHECK_EQ(out.dim(1), 64);

    Tensor small = rng.normal_tensor({4, 12}); // fits without pooling
    Tensor got = context_encode(Var::constant(small), pl, "ctx", 16, 2).value();
    Var proj = nn::linear_feat(Var::constant(small), pl.at("ctx.proj.W"), pl.at("ctx.proj.b"));
    Var att = nn::attention_block(ops::transpose(proj), pl, "ctx.att", 2);
    Tensor ref = ops::transpose(att).value();
    CHECK_LT(ts::max_abs_diff(got, ref), 1e-12);
}

TEST_CASE("constant context streams produce time-constant embeddings") {
    Model m = make_model(35);
    ParamLeaves pl(m.params(), false);
    Tensor stream = Tensor::full({4, 48}, 1.37);
    Tensor out = context_encode(Var::constant(stream), pl, "ctx", 16, 2).value();
    for (std::size_t f = 0; f < out.dim(0); ++f)
        for (std::size_t t = 1; t < out.dim(1); ++t)
            CHECK_LT(std::abs(out.at2(f, t) - out.at2(f, 0)), 1e-9);
}

TEST_CASE("fused embedding stacks detail over context features") {
    Rng rng(0xF1);
    Tensor eu = rng.normal_tensor({8, 20});
    Tensor ev = rng.normal_tensor({8, 20});
    Tensor ef = fuse_embeddings(Var::constant(eu), Var::constant(ev)).value();
    CHECK_EQ(ef.dim(0), 16);
    CHECK_EQ(ef.dim(1), 20);
    for (std::size_t f = 0; f < 8; ++f)
        for (std::size_t t = 0; t < 20; ++t) {
            CHECK_EQ(ef.at2(f, t), eu.at2(f, t));
            CHECK_EQ(ef.at2(8 + f, t), ev.at2(f, t));
        }

    Tensor ef0 = fuse_embeddings(Var::constant(eu), Var::constant(Tensor::zeros({8, 20}))).value();
    for (std::size_t f = 8; f < 16; ++f)
        for (std::size_t t = 0; t < 20; ++t) CHECK_EQ(ef0.at2(f, t), 0.0);
}

TEST_CASE("constant signals embed to interior-constant fused features") {
    Model m = make_model(36);
    ParamLeaves pl(m.params(), false);
    std::size_t L = 64;
    Tensor X = Tensor::full({1, L}, 0.8);
    FilterPair fp = wavelet_filters("haar");
    WaveletStack st = modwt(X, 4, fp);
    StreamSplit sp = partition_streams(X, st, 1);

    Tensor det({sp.detail.size(), L});
    for (std::size_t p = 0; p < sp.detail.size(); ++p)
        std::copy(sp.detail[p].data(), sp.detail[p].data() + L, det.data() + p * L);
    Tensor ctx({sp.context.size(), L});
    for (std::size_t p = 0; p < sp.context.size(); ++p)
        std::copy(sp.context[p].data(), sp.context[p].data() + L, ctx.data() + p * L);

    Var EU = detail_encode(Var::constant(det), pl, "detail");
    Var EV = context_encode(Var::constant(ctx), pl, "ctx", 16, 2);
    Tensor EF = fuse_embeddings(EU, EV).value();
    for (std::size_t f = 0; f < EF.dim(0); ++f)
        for (std::size_t t = 9; t + 8 < L; ++t)
            CHECK_LT(std::abs(EF.at2(f, t) - EF.at2(f, 8)), 1e-9);
}

TEST_CASE("embedding path passes finite differences end to end") {
    Model m = make_model(37);
    Rng rng(0xF2);
    Tensor det = rng.normal_tensor({2, 24});
    Tensor ctx = rng.normal_tensor({4, 24});
    Tensor w = rng.normal_tensor({16, 24});

    double err = ts::params_fd_max_rel_err(
        m.params(),
        [&](const ParamLeaves& pl) {
            Var EU = detail_encode(Var::constant(det), pl, "detail");
            Var EV = context_encode(Var::constant(ctx), pl, "ctx", 16, 2);
            return ops::vsum(ops::mul(fuse_embeddings(EU, EV), Var::constant(w)));
        },
        4, 1e-5, {"detail.", "ctx."});
    CHECK_LT(err, 1e-3);
}
