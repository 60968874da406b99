#pragma once

#include <cstddef>
#include <vector>

#include "dywave/autodiff.hpp"
#include "dywave/modwt.hpp"
#include "dywave/tensor.hpp"

namespace dywave {

enum class ChannelMode { shared, per_channel };

// Per-timestep change score from key/query projections of the fused
// embedding: P[t] = 1 - cos(Fk(EF[:,t-1]), Fq(EF[:,t])), with P[0] pinned to
// zero so the first step can never win a window. The projections are
// bias-free on purpose — an affine offset would break the invariance of the
// score under positive rescaling of EF.
//
// shared mode returns one sequence (the channel mean); per_channel returns
// one per channel.
std::vector<Var> saliency(const std::vector<Var>& EF_channels, const Var& Fk, const Var& Fq,
                          ChannelMode mode);

// Timesteps are 0-based here; only t >= 1 may be selected.
// t is kept iff no stronger value sits within w on either side, and among
// equal values only the earliest survives. w = 0 keeps every t >= 1.
std::vector<std::size_t> nms(const double* P, std::size_t L, std::size_t w);

struct AnchorSelection {
    std::vector<std::size_t> anchors; // ascending, 0-based
    std::size_t budget = 0;           // ceil(tau * L)
    std::size_t w_nms = 0;            // floor(L / (2 * budget))
    std::size_t candidate_count = 0;  // before the budget cap
};

// Budget-capped selection: NMS candidates, then the top `budget` by saliency
// (ties to the smaller timestep), re-sorted ascending.
AnchorSelection select_anchors(const double* P, std::size_t L, double tau);
AnchorSelection select_anchors(const Tensor& P, double tau);

// l2 norm of the detail planes per timestep, min-max normalized to [0,1],
// first entry pinned to zero before normalization.
Tensor spectral_saliency(const WaveletStack& stack);

} // namespace dywave
