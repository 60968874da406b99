#pragma once

#include <string>

#include "dywave/autodiff.hpp"
#include "dywave/nn.hpp"

namespace dywave {

// smallest s with ceil(L/s) <= L_ctx_max
std::size_t select_stride(std::size_t L, std::size_t L_ctx_max);

// Two convolutions (kernel 5) over the stream planes with a smooth rectifier
// between; keeps the time axis at L. Input [planes x L] -> [d_U x L].
Var detail_encode(const Var& stream, const ParamLeaves& pl, const std::string& prefix);

// Hourglass: per-timestep projection, average-pool by the selected stride,
// one encoder block over the pooled tokens, then linear resampling back to L.
// Input [planes x L] -> [d_V x L].
Var context_encode(const Var& stream, const ParamLeaves& pl, const std::string& prefix,
                   std::size_t L_ctx_max, std::size_t heads);

// feature concat: [d_U x L] + [d_V x L] -> [(d_U + d_V) x L]
Var fuse_embeddings(const Var& EU, const Var& EV);

} // namespace dywave
