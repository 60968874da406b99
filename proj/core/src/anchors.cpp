#include "dywave/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dywave/ops.hpp"

namespace dywave {

std::vector<Var> saliency(const std::vector<Var>& EF_channels, const Var& Fk, const Var& Fq,
                          ChannelMode mode) {
    if (EF_channels.empty()) throw std::invalid_argument("saliency: no channels");
    std::vector<Var> per_channel;
    per_channel.reserve(EF_channels.size());
    for (const auto& EF : EF_channels) {
        Var K = ops::matmul(Fk, EF);
        Var Q = ops::matmul(Fq, EF);
        per_channel.push_back(ops::adjacent_cosine_gap(K, Q));
    }
    if (mode == ChannelMode::per_channel) return per_channel;
    Var acc = per_channel[0];
    for (std::size_t c = 1; c < per_channel.size(); ++c) acc = ops::add(acc, per_channel[c]);
    return {ops::scale(acc, 1.0 / static_cast<double>(per_channel.size()))};
}

std::vector<std::size_t> nms(const double* P, std::size_t L, std::size_t w) {
    std::vector<std::size_t> out;
    for (std::size_t t = 1; t < L; ++t) {
        std::size_t lo = t > w ? t - w : 1;
        if (lo < 1) lo = 1;
        std::size_t hi = std::min(L - 1, t + w);
        bool keep = true;
        for (std::size_t u = lo; u <= hi && keep; ++u) {
            if (P[u] > P[t] || (P[u] == P[t] && u < t)) keep = false;
        }
        if (keep) out.push_back(t);
    }
    return out;
}

AnchorSelection select_anchors(const double* P, std::size_t L, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("select_anchors: tau must lie in (0,1)");
    if (L < 2) throw std::invalid_argument("select_anchors: sequence too short");
    AnchorSelection sel;
    sel.budget = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(L)));
    if (sel.budget < 1) sel.budget = 1;
    sel.w_nms = L / (2 * sel.budget);
    std::vector<std::size_t> cand = nms(P, L, sel.w_nms);
    sel.candidate_count = cand.size();
    if (cand.empty())
        throw std::logic_error("select_anchors: no candidates"); // unreachable for L >= 2
    if (cand.size() > sel.budget) {
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            if (P[a] != P[b]) return P[a] > P[b];
            return a < b;
        });
        cand.resize(sel.budget);
        std::sort(cand.begin(), cand.end());
    }
    sel.anchors = std::move(cand);
    return sel;
}

AnchorSelection select_anchors(const Tensor& P, double tau) {
    return select_anchors(P.data(), P.numel(), tau);
}

Tensor spectral_saliency(const WaveletStack& stack) {
    std::size_t C = stack.channels(), L = stack.length();
    Tensor P({L});
    for (const auto& d : stack.details)
        for (std::size_t c = 0; c < C; ++c) {
            const double* row = d.data() + c * L;
            for (std::size_t t = 0; t < L; ++t) P[t] += row[t] * row[t];
        }
    for (std::size_t t = 0; t < L; ++t) P[t] = std::sqrt(P[t]);
    P[0] = 0.0;
    double lo = P[0], hi = P[0];
    for (std::size_t t = 1; t < L; ++t) {
        lo = std::min(lo, P[t]);
        hi = std::max(hi, P[t]);
    }
    if (hi > lo)
        for (std::size_t t = 0; t < L; ++t) P[t] = (P[t] - lo) / (hi - lo);
    return P;
}

} // namespace dywave
