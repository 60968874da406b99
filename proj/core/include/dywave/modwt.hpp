#pragma once

#include <string>
#include <vector>

#include "dywave/tensor.hpp"

namespace dywave {

// Undecimated (maximal-overlap) wavelet filters, carrying the 1/sqrt(2)
// rescaling relative to the orthonormal DWT filters: sum g = 1, sum h = 0,
// sum of squares = 1/2 for both, and h mirrors g in quadrature.
struct FilterPair {
    std::string name;
    std::vector<double> h; // wavelet (high-pass)
    std::vector<double> g; // scaling (low-pass)
};

// name in {"haar", "db4"}; throws std::invalid_argument otherwise.
// The returned pair is validated against the filter identities (1e-12).
FilterPair wavelet_filters(const std::string& name);

// J detail planes plus one approximation, every plane C x L.
struct WaveletStack {
    std::vector<Tensor> details; // details[j] is level j+1, shape C x L
    Tensor approx;               // C x L
    std::size_t levels = 0;
    std::string basis;

    std::size_t channels() const { return approx.rank() ? approx.dim(0) : 0; }
    std::size_t length() const { return approx.rank() ? approx.dim(1) : 0; }
};

// Pyramid with circular boundary handling; every level keeps length L.
// Warns to stderr when 2^J exceeds L (the deepest filters then wrap fully).
WaveletStack modwt(const Tensor& X, std::size_t J, const FilterPair& fp);

// Inverse pyramid; exact up to floating-point roundoff.
Tensor imodwt(const WaveletStack& stack, const FilterPair& fp);

// Detail stream [X, dX_1..dX_K] and context stream [dX_{K+1}..dX_J, A],
// each as planes x (C x L) in order.
struct StreamSplit {
    std::vector<Tensor> detail;  // K+1 planes
    std::vector<Tensor> context; // J+1-K planes
    std::size_t K = 0;
};

StreamSplit partition_streams(const Tensor& X, const WaveletStack& stack, std::size_t K);

} // namespace dywave
