#pragma once

#include <string>

#include "dywave/autodiff.hpp"
#include "dywave/modwt.hpp"
#include "dywave/nn.hpp"

namespace dywave {

// Training-only decoder. Tokens [n x d] -> per-token linear to one value per
// coefficient plane -> transposed convolution (stride 4, kernel 8,
// channel-preserving) -> linear resampling to length L.
// Output is [planes x L] with planes = (J+1)*C, rows ordered detail levels
// first (each C channels), approximation last.
Var decode_tokens(const Var& tokens, const ParamLeaves& pl, const std::string& prefix,
                  std::size_t planes, std::size_t L);

// [planes x L] coefficient target in decoder row order
Tensor stack_planes(const WaveletStack& stack);

// mean squared error against the coefficient stack
Var recon_loss(const Var& W_hat, const WaveletStack& stack);

// task + lambda * rec
Var total_loss(const Var& task, const Var& rec, double lambda_rec);

} // namespace dywave
