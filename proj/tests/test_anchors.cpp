#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "dywave/anchors.hpp"
#include "dywave/modwt.hpp"
#include "dywave/rng.hpp"
#include "test_support.hpp"

using namespace dywave;

TEST_CASE("saliency vanishes when adjacent embeddings and projections coincide") {
    std::size_t d = 8, L = 6;
    Rng rng(41);
    Tensor proj = rng.normal_tensor({d / 4, d});
    Tensor col = rng.normal_tensor({d});
    Tensor EF({d, L});
    for (std::size_t f = 0; f < d; ++f)
        for (std::size_t t = 0; t < L; ++t) EF.at2(f, t) = col[f];

    auto P = saliency({Var::constant(EF)}, Var::constant(proj), Var::constant(proj),
                      ChannelMode::shared);
    REQUIRE_EQ(P.size(), 1);
    const Tensor& p = P[0].value();
    REQUIRE_EQ(p.numel(), L);
    for (std::size_t t = 0; t < L; ++t) CHECK_LT(std::abs(p[t]), 1e-12);
}

TEST_CASE("saliency is invariant under positive rescaling of the embedding") {
    std::size_t d = 16, L = 40;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(Rng::mix(42, seed));
        Tensor EF = rng.normal_tensor({d, L});
        Tensor Fk = rng.normal_tensor({d / 4, d});
        Tensor Fq = rng.normal_tensor({d / 4, d});

        Tensor base = saliency({Var::constant(EF)}, Var::constant(Fk), Var::constant(Fq),
                               ChannelMode::shared)[0]
                          .value();
        AnchorSelection sel = select_anchors(base, 0.2);

        for (double c : {1e-3, 3.0, 1e4}) {
            Tensor scaled(EF.shape());
            for (std::size_t i = 0; i < EF.numel(); ++i) scaled[i] = c * EF[i];
            Tensor ps = saliency({Var::constant(scaled)}, Var::constant(Fk), Var::constant(Fq),
                                 ChannelMode::shared)[0]
                            .value();
            CHECK_LT(ts::max_abs_diff(ps, base), 1e-9);
            AnchorSelection sel_c = select_anchors(ps, 0.2);
            CHECK_EQ(sel_c.anchors, sel.anchors); // index-level equality
        }
    }
}

TEST_CASE("orthogonal key and query span a saliency of exactly one") {
    std::size_t d = 8, L = 3;
    // key projection reads features 0-1, query reads 2-3
    Tensor Fk = Tensor::zeros({2, d});
    Fk.at2(0, 0) = 1.0;
    Fk.at2(1, 1) = 1.0;
    Tensor Fq = Tensor::zeros({2, d});
    Fq.at2(0, 2) = 1.0;
    Fq.at2(1, 3) = 1.0;

    Tensor EF = Tensor::zeros({d, L});
    EF.at2(0, 0) = 1.0; // k at t=0 is (1,0)
    EF.at2(3, 1) = 1.0; // q at t=1 is (0,1), orthogonal to the key before it
    EF.at2(2, 2) = 1.0;

    Tensor p = saliency({Var::constant(EF)}, Var::constant(Fk), Var::constant(Fq),
                        ChannelMode::shared)[0]
                   .value();
    CHECK_EQ(p[0], 0.0);
    CHECK_LT(std::abs(p[1] - 1.0), 1e-12);
}

TEST_CASE("per-channel mode returns one saliency sequence per channel") {
    std::size_t d = 8, L = 10;
    Rng rng(43);
    std::vector<Var> EF = {Var::constant(rng.normal_tensor({d, L})),
                           Var::constant(rng.normal_tensor({d, L}))};
    Var Fk = Var::constant(rng.normal_tensor({d / 4, d}));
    Var Fq = Var::constant(rng.normal_tensor({d / 4, d}));

    auto per = saliency(EF, Fk, Fq, ChannelMode::per_channel);
    auto shared = saliency(EF, Fk, Fq, ChannelMode::shared);
    REQUIRE_EQ(per.size(), 2);
    REQUIRE_EQ(shared.size(), 1);
    for (std::size_t t = 0; t < L; ++t) {
        double mean = 0.5 * (per[0].value()[t] + per[1].value()[t]);
        CHECK_LT(std::abs(shared[0].value()[t] - mean), 1e-12);
    }
}

TEST_CASE("nms keeps the stated local maxima") {
    const double P[] = {0.0, 0.1, 0.9, 0.2, 0.8, 0.3};
    auto got = nms(P, 6, 1);
    CHECK_EQ(got, std::vector<std::size_t>{2, 4});
}

TEST_CASE("nms over all-equal values spaces survivors by the window") {
    Tensor P = Tensor::full({9}, 0.5);
    auto got = nms(P.data(), 9, 2);
    CHECK_EQ(got, std::vector<std::size_t>{1, 4, 7});
    for (std::size_t i = 1; i < got.size(); ++i) CHECK_GT(got[i] - got[i - 1], 2);
}

TEST_CASE("nms with a dominating window keeps a single peak") {
    Rng rng(44);
    Tensor P = rng.uniform_tensor({20}, 0.0, 0.4);
    P[13] = 1.0;
    auto got = nms(P.data(), 20, 20);
    CHECK_EQ(got, std::vector<std::size_t>{13});
}

TEST_CASE("nms with window zero passes every timestep past the first") {
    Rng rng(45);
    Tensor P = rng.uniform_tensor({11}, 0.0, 1.0);
    auto got = nms(P.data(), 11, 0);
    REQUIRE_EQ(got.size(), 10);
    for (std::size_t t = 1; t < 11; ++t) CHECK_EQ(got[t - 1], t);
}

TEST_CASE("nms agrees with the quadratic reference on random sequences") {
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; checked < 1200; ++seed) {
        Rng rng(Rng::mix(0xA45, seed));
        std::size_t L = 2 + rng.below(63);
        std::size_t w = rng.below(9);
        Tensor P({L});
        bool coarse = rng.uniform() < 0.5; // a small value set forces ties
        for (std::size_t t = 0; t < L; ++t)
            P[t] = coarse ? 0.25 * static_cast<double>(rng.below(4)) : rng.uniform();
        auto got = nms(P.data(), L, w);
        auto want = ts::nms_reference(P.data(), L, w);
        CAPTURE(seed);
        CHECK_EQ(got, want);
        ++checked;
    }
}

TEST_CASE("anchor selection instantiates the stated budget and window") {
    Rng rng(46);
    Tensor P = rng.uniform_tensor({1000}, 0.0, 1.0);
    AnchorSelection sel = select_anchors(P, 0.1);
    CHECK_EQ(sel.budget, 100);
    CHECK_EQ(sel.w_nms, 5);
    CHECK_LE(sel.anchors.size(), 100);
    for (std::size_t i = 1; i < sel.anchors.size(); ++i)
        CHECK_GT(sel.anchors[i] - sel.anchors[i - 1], sel.w_nms);
}

TEST_CASE("sparse peaks yield fewer anchors than the budget") {
    // piecewise-linear profile, strictly monotone between alternating knots,
    // so the seven peak knots are the only local maxima anywhere
    std::size_t L = 400;
    std::vector<std::size_t> peaks = {19, 70, 121, 180, 240, 301, 365};
    std::vector<std::pair<std::size_t, double>> knots = {{0, 0.30}};
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        knots.push_back({peaks[i], 0.80 + 0.01 * static_cast<double>(i)});
        std::size_t next = i + 1 < peaks.size() ? (peaks[i] + peaks[i + 1]) / 2 : L - 1;
        knots.push_back({next, 0.05 + 0.013 * static_cast<double>(i)});
    }
    Tensor P({L});
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        auto [t0, v0] = knots[k];
        auto [t1, v1] = knots[k + 1];
        for (std::size_t t = t0; t <= t1; ++t)
            P[t] = v0 + (v1 - v0) * static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
    }

    AnchorSelection sel = select_anchors(P, 0.25); // budget 100, window 2
    CHECK_EQ(sel.budget, 100);
    CHECK_EQ(sel.anchors, peaks);
    CHECK_EQ(nms(P.data(), L, sel.w_nms), ts::nms_reference(P.data(), L, sel.w_nms));
}

TEST_CASE("window zero degenerates to a pure top-k over all timesteps") {
    Rng rng(47);
    std::size_t L = 10;
    Tensor P = rng.uniform_tensor({L}, 0.0, 1.0);
    AnchorSelection sel = select_anchors(P, 0.6); // budget 6 -> window 0
    CHECK_EQ(sel.w_nms, 0);
    CHECK_EQ(sel.candidate_count, L - 1);
    CHECK_EQ(sel.anchors.size(), std::min(L - 1, sel.budget));
}

TEST_CASE("top-k ties resolve to the earliest timesteps") {
    std::size_t L = 12;
    Tensor P = Tensor::zeros({L});
    for (std::size_t t : {2, 5, 8, 11}) P[t] = 1.0;
    AnchorSelection sel = select_anchors(P, 0.25); // budget 3, window 2
    CHECK_EQ(sel.candidate_count, 4);
    CHECK_EQ(sel.anchors, std::vector<std::size_t>{2, 5, 8});
}

TEST_CASE("anchor selection is deterministic and budget-capped on random inputs") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(Rng::mix(0xB00, seed));
        std::size_t L = 2 + rng.below(500);
        double tau = rng.uniform(0.02, 0.9);
        if (static_cast<std::size_t>(std::ceil(tau * double(L))) < 1) continue;
        Tensor P = rng.uniform_tensor({L}, 0.0, 2.0);
        P[0] = 0.0;

        AnchorSelection a = select_anchors(P, tau);
        AnchorSelection b = select_anchors(P, tau);
        CHECK_EQ(a.anchors, b.anchors);
        CHECK_GE(a.anchors.size(), 1);
        CHECK_LE(a.anchors.size(), a.budget);
        for (std::size_t i = 1; i < a.anchors.size(); ++i) {
            CHECK_GT(a.anchors[i], a.anchors[i - 1]);
            if (a.w_nms >= 1) CHECK_GT(a.anchors[i] - a.anchors[i - 1], a.w_nms);
        }
        for (std::size_t t : a.anchors) CHECK_GE(t, 1);
    }
}

TEST_CASE("tau outside the open unit interval is rejected") {
    Tensor P = Tensor::zeros({16});
    CHECK_THROWS_AS(select_anchors(P, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(select_anchors(P, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(select_anchors(P, -0.3), std::invalid_argument);
}

TEST_CASE("spectral saliency normalizes detail energy per timestep") {
    FilterPair fp = wavelet_filters("haar");

    Tensor zero({1, 32});
    Tensor pz = spectral_saliency(modwt(zero, 2, fp));
    CHECK_EQ(ts::max_abs(pz), 0.0);

    Tensor X = Tensor::zeros({1, 32});
    X[16] = 1.0;
    Tensor p = spectral_saliency(modwt(X, 1, fp));
    REQUIRE_EQ(p.numel(), 32);
    CHECK_EQ(p[0], 0.0);
    double maxv = 0.0;
    std::size_t argmax = 0;
    for (std::size_t t = 0; t < 32; ++t) {
        CHECK_GE(p[t], 0.0);
        CHECK_LE(p[t], 1.0);
        if (p[t] > maxv) {
            maxv = p[t];
            argmax = t;
        }
    }
    CHECK_EQ(maxv, 1.0);
    CHECK_GE(argmax, 15);
    CHECK_LE(argmax, 17); // within the level-1 filter support of the impulse
}
