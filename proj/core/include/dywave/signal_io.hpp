#pragma once

#include <stdexcept>
#include <string>

#include "dywave/tensor.hpp"

namespace dywave {

// file unreadable, truncated, malformed, or holding non-finite values
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary signal container, one [channels x length] plane set per file.
// Layout: "DYWV", u32 version=1, u32 C, u64 L, then C*L little-endian
// 32-bit floats channel-major. Wavelet stacks reuse it with (J+1)*C planes.
void write_signal(const std::string& path, const Tensor& X);
Tensor read_signal(const std::string& path); // sniffs binary magic, else CSV

// CSV alternative: header c0,c1,...  then one row per timestep.
void write_signal_csv(const std::string& path, const Tensor& X);
Tensor read_signal_csv(const std::string& path);

} // namespace dywave
