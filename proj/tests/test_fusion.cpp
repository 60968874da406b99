#include <cmath>
#include <vector>

#include "doctest.h"

#include "dywave/fusion.hpp"
#include "dywave/gradcheck.hpp"
#include "dywave/ops.hpp"
#include "dywave/rng.hpp"
#include "test_support.hpp"

using namespace dywave;

TEST_CASE("assignment splits ten timesteps between two anchors") {
    auto cl = assign_clusters({2, 6}, 10);
    // the midpoint t=4 is equidistant and stays with the earlier anchor
    std::vector<std::size_t> want = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK_EQ(cl, want);
}

TEST_CASE("assignment degenerate cases") {
    auto one = assign_clusters({0}, 5);
    CHECK_EQ(one, std::vector<std::size_t>(5, 0));

    std::vector<std::size_t> all(7);
    for (std::size_t t = 0; t < 7; ++t) all[t] = t;
    CHECK_EQ(assign_clusters(all, 7), all);

    CHECK_THROWS_AS(assign_clusters({}, 5), std::invalid_argument);
    CHECK_THROWS_AS(assign_clusters({3, 3}, 5), std::invalid_argument);
    CHECK_THROWS_AS(assign_clusters({9}, 5), std::invalid_argument);
}

TEST_CASE("assignment matches the argmin reference and partitions the range") {
    for (std::uint64_t seed = 0; seed < 1100; ++seed) {
        Rng rng(Rng::mix(0xF05, seed));
        std::size_t L = 1 + rng.below(200);
        std::size_t n = 1 + rng.below(std::min<std::size_t>(L, 24));
        std::vector<std::size_t> anchors;
        std::size_t t = rng.below(L - n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            anchors.push_back(t);
            std::size_t slack = (L - 1 - t) - (n - 1 - i);
            t += 1 + (slack ? rng.below(std::min<std::size_t>(slack, 9) + 1) : 0);
        }

        auto got = assign_clusters(anchors, L);
        CAPTURE(seed);
        CHECK_EQ(got, ts::assign_reference(anchors, L));

        // contiguous, covering, disjoint; every anchor owns itself
        CHECK_EQ(got.front(), 0);
        CHECK_EQ(got.back(), n - 1);
        for (std::size_t i = 1; i < L; ++i) {
            CHECK_GE(got[i], got[i - 1]);
            CHECK_LE(got[i] - got[i - 1], 1);
        }
        for (std::size_t k = 0; k < n; ++k) CHECK_EQ(got[anchors[k]], k);
    }
}

TEST_CASE("fused token is the stabilized convex combination") {
    Tensor EF({2, 2});
    EF.at2(0, 0) = 1.0; // t=0 carries (1,0) with weight 0.2
    EF.at2(1, 1) = 1.0; // t=1 carries (0,1) with weight 0.8
    Tensor P({2}, {0.2, 0.8});
    Tensor EA = fuse_channel(Var::constant(EF), Var::constant(P), {0, 0}, 1).value();
    REQUIRE_EQ(EA.dim(0), 2);
    REQUIRE_EQ(EA.dim(1), 1);
    CHECK_LT(std::abs(EA.at2(0, 0) - 0.2 / (1.0 + 1e-6)), 1e-15);
    CHECK_LT(std::abs(EA.at2(1, 0) - 0.8 / (1.0 + 1e-6)), 1e-15);
    CHECK_LT(std::abs(EA.at2(0, 0) - 0.2), 1e-6);
    CHECK_LT(std::abs(EA.at2(1, 0) - 0.8), 1e-6);
}

TEST_CASE("single-timestep clusters pass their embedding through") {
    Rng rng(61);
    Tensor EF = rng.normal_tensor({4, 3});
    Tensor P({3}, {0.4, 0.9, 0.7});
    Tensor EA = fuse_channel(Var::constant(EF), Var::constant(P), {0, 1, 2}, 3).value();
    for (std::size_t k = 0; k < 3; ++k) {
        double shrink = P[k] / (P[k] + 1e-6);
        for (std::size_t f = 0; f < 4; ++f)
            CHECK_LT(std::abs(EA.at2(f, k) - EF.at2(f, k) * shrink), 1e-12);
    }
}

TEST_CASE("uniform weights reduce to the cluster mean") {
    Rng rng(62);
    Tensor EF = rng.normal_tensor({4, 6});
    Tensor P = Tensor::full({6}, 0.5);
    std::vector<std::size_t> cof = {0, 0, 0, 1, 1, 1};
    Tensor EA = fuse_channel(Var::constant(EF), Var::constant(P), cof, 2).value();
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t f = 0; f < 4; ++f) {
            double mean = (EF.at2(f, 3 * k) + EF.at2(f, 3 * k + 1) + EF.at2(f, 3 * k + 2)) / 3.0;
            CHECK_LT(std::abs(EA.at2(f, k) - mean), 1e-6 * std::abs(mean) + 1e-9);
        }
}

TEST_CASE("zero-weight clusters fall back to the unweighted mean") {
    Rng rng(63);
    Tensor EF = rng.normal_tensor({3, 5});
    Tensor P = Tensor::zeros({5}); // e.g. an all-quiescent cluster holding t=0
    P[3] = 0.6;
    P[4] = 0.2;
    std::vector<std::size_t> cof = {0, 0, 0, 1, 1};
    Tensor EA = fuse_channel(Var::constant(EF), Var::constant(P), cof, 2).value();
    for (std::size_t f = 0; f < 3; ++f) {
        double mean = (EF.at2(f, 0) + EF.at2(f, 1) + EF.at2(f, 2)) / 3.0;
        CHECK_EQ(EA.at2(f, 0), doctest::Approx(mean).epsilon(1e-12));
    }
    for (std::size_t f = 0; f < 3; ++f) {
        double want = (0.6 * EF.at2(f, 3) + 0.2 * EF.at2(f, 4)) / (0.8 + 1e-6);
        CHECK_LT(std::abs(EA.at2(f, 1) - want), 1e-12);
    }
}

TEST_CASE("fusion stays within the epsilon bound of the exact convex combination") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(Rng::mix(0xF0E, seed));
        std::size_t d = 2 + rng.below(8);
        std::size_t L = 2 + rng.below(40);
        std::size_t n = 1 + rng.below(std::min<std::size_t>(L, 8));
        std::vector<std::size_t> anchors;
        for (std::size_t k = 0; k < n; ++k) anchors.push_back(k * (L / n));
        std::sort(anchors.begin(), anchors.end());
        anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
        auto cof = assign_clusters(anchors, L);

        Tensor EF = rng.normal_tensor({d, L});
        Tensor P = rng.uniform_tensor({L}, 0.0, 2.0);
        Tensor EA = fuse_channel(Var::constant(EF), Var::constant(P), cof, anchors.size()).value();

        for (std::size_t k = 0; k < anchors.size(); ++k) {
            double wsum = 0.0, max_norm = 0.0;
            for (std::size_t t = 0; t < L; ++t) {
                if (cof[t] != k) continue;
                wsum += P[t];
                double nrm = 0.0;
                for (std::size_t f = 0; f < d; ++f) nrm += EF.at2(f, t) * EF.at2(f, t);
                max_norm = std::max(max_norm, std::sqrt(nrm));
            }
            if (wsum < 1e-9) continue;
            double dev = 0.0;
            for (std::size_t f = 0; f < d; ++f) {
                double exact = 0.0;
                for (std::size_t t = 0; t < L; ++t)
                    if (cof[t] == k) exact += P[t] / wsum * EF.at2(f, t);
                double e = EA.at2(f, k) - exact;
                dev += e * e;
            }
            CAPTURE(seed);
            CHECK_LE(std::sqrt(dev), 1e-6 * max_norm / wsum + 1e-15);
        }
    }
}

TEST_CASE("token projection matches a per-anchor reference evaluation") {
    Rng rng(64);
    std::size_t d = 6, hidden = 10, L = 30;
    std::vector<std::size_t> anchors = {4, 11, 19, 27};

    ParamStore ps;
    ps.add("fuse.W1", rng.normal_tensor({hidden, d}));
    ps.add("fuse.b1", rng.normal_tensor({hidden}));
    ps.add("fuse.W2", rng.normal_tensor({d, hidden}));
    ps.add("fuse.b2", rng.normal_tensor({d}));
    ParamLeaves pl(ps, false);

    Tensor EA = rng.normal_tensor({d, anchors.size()});
    Tensor got =
        project_tokens({Var::constant(EA)}, anchors, L, pl, "fuse", true).value();
    REQUIRE_EQ(got.dim(0), anchors.size());
    REQUIRE_EQ(got.dim(1), d);

    std::vector<double> pos(anchors.size());
    for (std::size_t k = 0; k < anchors.size(); ++k)
        pos[k] = static_cast<double>(anchors[k] + 1) / static_cast<double>(L);
    Tensor pe = nn::positional_encoding(pos, d);

    auto gelu = [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); };
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        std::vector<double> h(hidden);
        for (std::size_t i = 0; i < hidden; ++i) {
            double s = ps.at("fuse.b1")[i];
            for (std::size_t f = 0; f < d; ++f) s += ps.at("fuse.W1").at2(i, f) * EA.at2(f, k);
            h[i] = gelu(s);
        }
        for (std::size_t o = 0; o < d; ++o) {
            double s = ps.at("fuse.b2")[o];
            for (std::size_t i = 0; i < hidden; ++i) s += ps.at("fuse.W2").at2(o, i) * h[i];
            CHECK_LT(std::abs(got.at2(k, o) - (s + pe.at2(k, o))), 1e-10);
        }
    }

    // disabling the positional code removes exactly that term
    Tensor bare =
        project_tokens({Var::constant(EA)}, anchors, L, pl, "fuse", false).value();
    for (std::size_t k = 0; k < anchors.size(); ++k)
        for (std::size_t o = 0; o < d; ++o)
            CHECK_LT(std::abs(got.at2(k, o) - bare.at2(k, o) - pe.at2(k, o)), 1e-12);
}

TEST_CASE("zero aggregates leave only the bias path and position codes") {
    Rng rng(65);
    std::size_t d = 6, hidden = 8, L = 16;
    std::vector<std::size_t> anchors = {3, 9, 14};
    ParamStore ps;
    ps.add("fuse.W1", rng.normal_tensor({hidden, d}));
    ps.add("fuse.b1", rng.normal_tensor({hidden}));
    ps.add("fuse.W2", rng.normal_tensor({d, hidden}));
    ps.add("fuse.b2", rng.normal_tensor({d}));
    ParamLeaves pl(ps, false);

    Tensor zero = Tensor::zeros({d, anchors.size()});
    Tensor tok = project_tokens({Var::constant(zero)}, anchors, L, pl, "fuse", true).value();

    std::vector<double> pos(anchors.size());
    for (std::size_t k = 0; k < anchors.size(); ++k)
        pos[k] = static_cast<double>(anchors[k] + 1) / static_cast<double>(L);
    Tensor pe = nn::positional_encoding(pos, d);

    // all rows share the bias response; differences are purely positional
    for (std::size_t k = 0; k < anchors.size(); ++k)
        for (std::size_t o = 0; o < d; ++o) {
            double bias_part = tok.at2(k, o) - pe.at2(k, o);
            double bias_ref = tok.at2(0, o) - pe.at2(0, o);
            CHECK_LT(std::abs(bias_part - bias_ref), 1e-12);
        }
}

TEST_CASE("fuse and project pass a joint finite-difference check") {
    Rng rng(66);
    std::size_t d = 4, hidden = 6, L = 12;
    std::vector<std::size_t> anchors = {2, 7, 10};
    auto cof = assign_clusters(anchors, L);

    ParamStore ps;
    ps.add("fuse.W1", rng.normal_tensor({hidden, d}));
    ps.add("fuse.b1", rng.normal_tensor({hidden}));
    ps.add("fuse.W2", rng.normal_tensor({d, hidden}));
    ps.add("fuse.b2", rng.normal_tensor({d}));

    Tensor EF = rng.normal_tensor({d, L});
    Tensor P = rng.uniform_tensor({L}, 0.1, 1.0);
    Tensor w = rng.normal_tensor({anchors.size(), d});

    double err = ts::params_fd_max_rel_err(
        ps,
        [&](const ParamLeaves& pl) {
            Var EA = fuse_channel(Var::constant(EF), Var::constant(P), cof, anchors.size());
            Var tok = project_tokens({EA}, anchors, L, pl, "fuse", true);
            return ops::vsum(ops::mul(tok, Var::constant(w)));
        },
        6, 1e-5);
    CHECK_LT(err, 1e-3);

    // and through the embedding/saliency inputs of the fusion itself
    auto res = gradcheck::check(
        [&](const std::vector<Var>& v) {
            Var EA = fuse_channel(v[0], v[1], cof, anchors.size());
            return ops::vsum(ops::mul(EA, Var::constant(rng.normal_tensor({d, anchors.size()}))));
        },
        {EF, P});
    CHECK_LT(res.max_rel_err, 1e-3);
}
