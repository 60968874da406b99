#pragma once

#include <cstddef>
#include <vector>

#include "dywave/autodiff.hpp"
#include "dywave/tensor.hpp"

namespace dywave::ops {

inline constexpr double kCosEps = 1e-12;

// ---- elementwise / shape ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var gelu(const Var& x);
Var vsum(const Var& x);               // sum of all entries -> scalar
Var transpose(const Var& x);          // rank-2
Var reshape(const Var& x, std::vector<std::size_t> shape);
Var concat_rows(const std::vector<Var>& xs);
Var slice_rows(const Var& x, std::size_t r0, std::size_t r1);
Var concat_cols(const std::vector<Var>& xs);
Var slice_cols(const Var& x, std::size_t c0, std::size_t c1);
Var gather_cols(const Var& x, std::vector<std::size_t> idx);

// broadcast adds: b across rows of X[T x d], or across columns of X[R x C]
Var add_rowvec(const Var& X, const Var& b);
Var add_colvec(const Var& X, const Var& b);

// ---- linear algebra ----
Var matmul(const Var& A, const Var& B);    // A[m x k] * B[k x n]
Var matmul_nt(const Var& A, const Var& B); // A[m x k] * B[n x k]^T
// fused X[T x k] * W[n x k]^T + b (b broadcast over rows)
Var affine_nt(const Var& X, const Var& W, const Var& b);
// fused W[R x k] * X[k x N] + b (b broadcast over columns)
Var affine_feat(const Var& W, const Var& X, const Var& b);
// full multi-head attention core: per-head scaled scores, row softmax, and
// value mixing in a single node (only the softmax matrices are kept for
// the backward pass)
Var mha(const Var& Q, const Var& K, const Var& V, std::size_t heads);

// ---- convolution / pooling / resampling ----
// "same" zero padding; output[o,t] = sum_{i,l} W[o,i,l] * x[i, t+l-k/2]
Var conv1d(const Var& X, const Var& W, const Var& bias = Var());
// fractionally-strided; output trimmed on the trailing side to stride*T
Var conv1d_transpose(const Var& X, const Var& W, std::size_t stride);
Var avg_pool1d(const Var& X, std::size_t stride);
// per-row: linear interpolation up, contiguous bin means down, identity if equal
Var resample(const Var& X, std::size_t target_len);

// ---- normalization / attention pieces ----
Var layernorm_rows(const Var& X, const Var& gamma, const Var& beta, double eps = 1e-5);
Var softmax_rows(const Var& X);
Var mean_rows(const Var& X); // [T x d] -> [1 x d]

// ---- saliency / fusion primitives ----
// scalar cosine similarity with the degenerate-norm guard
Var cosine_similarity(const Var& u, const Var& v);
// P[0] = 0; P[t] = 1 - cos(K[:,t-1], Q[:,t]) for t in [1, L)
Var adjacent_cosine_gap(const Var& K, const Var& Q);
// EA[:,k] = sum_{t in cluster k} P[t] EF[:,t] / (sum P[t] + eps);
// clusters whose saliency mass is below `fallback_below` fall back to the
// unweighted cluster mean
Var weighted_cluster_sum(const Var& EF, const Var& P,
                         const std::vector<std::size_t>& cluster_of,
                         std::size_t n_clusters, double eps = 1e-6,
                         double fallback_below = 1e-9);

// ---- losses ----
Var cross_entropy_logits(const Var& logits, std::size_t label);
Var mse(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

} // namespace dywave::ops
