#include "dywave/embed.hpp"

#include "dywave/ops.hpp"

namespace dywave {

std::size_t select_stride(std::size_t L, std::size_t L_ctx_max) {
    if (L < 1 || L_ctx_max < 1) return 1;
    return (L + L_ctx_max - 1) / L_ctx_max;
}

Var detail_encode(const Var& stream, const ParamLeaves& pl, const std::string& prefix) {
    Var h = ops::conv1d(stream, pl.at(prefix + ".c1.W"), pl.at(prefix + ".c1.b"));
    return ops::conv1d(ops::gelu(h), pl.at(prefix + ".c2.W"), pl.at(prefix + ".c2.b"));
}

Var context_encode(const Var& stream, const ParamLeaves& pl, const std::string& prefix,
                   std::size_t L_ctx_max, std::size_t heads) {
    std::size_t L = stream.value().cols();
    std::size_t s = select_stride(L, L_ctx_max);
    Var proj = nn::linear_feat(stream, pl.at(prefix + ".proj.W"), pl.at(prefix + ".proj.b"));
    Var pooled = s > 1 ? ops::avg_pool1d(proj, s) : proj;
    Var att = nn::attention_block(ops::transpose(pooled), pl, prefix + ".att", heads);
    return ops::resample(ops::transpose(att), L);
}

Var fuse_embeddings(const Var& EU, const Var& EV) {
    return ops::concat_rows({EU, EV});
}

} // namespace dywave
