#pragma once

#include <cstdint>
#include <vector>

#include "dywave/tensor.hpp"

namespace dywave {

// Event-style synthetic signals: a Gaussian noise floor with class-specific
// burst motifs (square pulse, damped sine, linear chirp) dropped into
// otherwise quiescent stretches. Class signatures differ in burst count,
// duration and waveform so the labels are recoverable from band energy and
// shape. Class 0 is deliberately sparse: one or two events per sequence.
struct SynthSpec {
    std::size_t n_classes = 4;
    std::size_t L = 512;
    std::size_t C = 1;
    std::size_t count = 2000;
    double noise_std = 0.05;
    double gap_frac = 0.3;    // slot fraction kept quiet around each burst
    double burst_scale = 1.0; // motif amplitude multiplier; 0 removes all events
    std::uint64_t seed = 7;
};

struct Sample {
    Tensor X; // C x L
    std::size_t label = 0;
};

// Deterministic per (seed, index); labels cycle so classes stay balanced.
std::vector<Sample> gen_synthetic(const SynthSpec& spec);

} // namespace dywave
