#include "dywave/fusion.hpp"

#include <stdexcept>

#include "dywave/ops.hpp"

namespace dywave {

std::vector<std::size_t> assign_clusters(const std::vector<std::size_t>& anchors,
                                         std::size_t L) {
    if (anchors.empty()) throw std::invalid_argument("assign_clusters: empty anchor set");
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i)
        if (anchors[i] >= anchors[i + 1])
            throw std::invalid_argument("assign_clusters: anchors must be strictly increasing");
    if (anchors.back() >= L)
        throw std::invalid_argument("assign_clusters: anchor beyond sequence end");
    auto dist = [](std::size_t a, std::size_t t) { return a > t ? a - t : t - a; };
    std::vector<std::size_t> cl(L);
    std::size_t k = 0;
    for (std::size_t t = 0; t < L; ++t) {
        // advance only while the next anchor is strictly closer, so an
        // equidistant timestep stays with the earlier anchor
        while (k + 1 < anchors.size() && dist(anchors[k + 1], t) < dist(anchors[k], t)) ++k;
        cl[t] = k;
    }
    return cl;
}

Var fuse_channel(const Var& EF, const Var& P, const std::vector<std::size_t>& cluster_of,
                 std::size_t n_clusters) {
    return ops::weighted_cluster_sum(EF, P, cluster_of, n_clusters);
}

Var project_tokens(const std::vector<Var>& EA_channels,
                   const std::vector<std::size_t>& anchors, std::size_t L,
                   const ParamLeaves& pl, const std::string& prefix, bool positional) {
    if (EA_channels.empty()) throw std::invalid_argument("project_tokens: no channels");
    Var merged = EA_channels.size() == 1 ? EA_channels[0] : ops::concat_rows(EA_channels);
    Var tok = nn::mlp_feat(merged, pl.at(prefix + ".W1"), pl.at(prefix + ".b1"),
                           pl.at(prefix + ".W2"), pl.at(prefix + ".b2"));
    Var tm = ops::transpose(tok); // [|anchors| x d]
    if (positional) {
        std::vector<double> pos(anchors.size());
        for (std::size_t i = 0; i < anchors.size(); ++i)
            pos[i] = static_cast<double>(anchors[i] + 1) / static_cast<double>(L);
        Tensor pe = nn::positional_encoding(pos, tm.value().cols());
        tm = ops::add(tm, Var::constant(std::move(pe)));
    }
    return tm;
}

} // namespace dywave
