#pragma once

#include <cstddef>
#include <vector>

#include "dywave/autodiff.hpp"
#include "dywave/nn.hpp"

namespace dywave {

// Nearest-anchor assignment over [0, L); equidistant timesteps go to the
// earlier anchor, which keeps every cluster a contiguous interval. Returns
// the cluster index (position within `anchors`) per timestep.
std::vector<std::size_t> assign_clusters(const std::vector<std::size_t>& anchors,
                                         std::size_t L);

// Saliency-weighted aggregation of one channel's embedding into per-anchor
// vectors; thin wrapper over the fused-sum op so callers share one epsilon.
Var fuse_channel(const Var& EF, const Var& P, const std::vector<std::size_t>& cluster_of,
                 std::size_t n_clusters);

// Channel concat -> two-layer MLP -> d, plus the sinusoidal position code of
// each anchor (1-based timestep / L) unless disabled. Output is token-major
// [|anchors| x d].
Var project_tokens(const std::vector<Var>& EA_channels,
                   const std::vector<std::size_t>& anchors, std::size_t L,
                   const ParamLeaves& pl, const std::string& prefix, bool positional);

} // namespace dywave
