#pragma once

#include <string>

#include "dywave/pipeline.hpp"

namespace dywave {

// JSON document for one tokenized signal: sequence length, channel count, the
// budget fraction, 1-based anchor timesteps, the saliency curve, 1-based
// inclusive [start,end] cluster spans, and optionally the token embeddings.
// Validates that the spans partition [1,L] and that counts agree.
std::string token_report_json(const TokenizeResult& tok, std::size_t L, std::size_t C,
                              double tau, bool emit_tokens);

} // namespace dywave
