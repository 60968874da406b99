#pragma once

#include <cstddef>

#include "dywave/tensor.hpp"

namespace dywave::kernels {

// Hot loops live here. Everything is written so the compiler can vectorize
// without value-changing flags. Reductions carry a fixed set of independent
// accumulator lanes; the lane split is part of the definition, so results
// are bit-stable from run to run of the same build.

inline void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

#if defined(__GNUC__)
// gcc and clang won't turn scalar accumulator lanes into packed code when
// the trip count is only known at run time, so the reductions spell out the
// vectors themselves. The unaligned loads go through memcpy, which compiles
// to a single vmovupd.
namespace detail {
typedef double v4d __attribute__((vector_size(32)));
inline v4d load4(const double* p) {
    v4d v;
    __builtin_memcpy(&v, p, sizeof v);
    return v;
}
inline double hadd(v4d v) { return (v[0] + v[1]) + (v[2] + v[3]); }
}  // namespace detail

inline double dot(const double* a, const double* b, std::size_t n) {
    detail::v4d c0 = {0, 0, 0, 0}, c1 = c0, c2 = c0, c3 = c0;
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        c0 += detail::load4(a + i) * detail::load4(b + i);
        c1 += detail::load4(a + i + 4) * detail::load4(b + i + 4);
        c2 += detail::load4(a + i + 8) * detail::load4(b + i + 8);
        c3 += detail::load4(a + i + 12) * detail::load4(b + i + 12);
    }
    for (; i + 4 <= n; i += 4) c0 += detail::load4(a + i) * detail::load4(b + i);
    double s = detail::hadd(c0 + (c1 + (c2 + c3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double sum(const double* a, std::size_t n) {
    detail::v4d c0 = {0, 0, 0, 0}, c1 = c0, c2 = c0, c3 = c0;
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        c0 += detail::load4(a + i);
        c1 += detail::load4(a + i + 4);
        c2 += detail::load4(a + i + 8);
        c3 += detail::load4(a + i + 12);
    }
    for (; i + 4 <= n; i += 4) c0 += detail::load4(a + i);
    double s = detail::hadd(c0 + (c1 + (c2 + c3)));
    for (; i < n; ++i) s += a[i];
    return s;
}
#else
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = ((s0 + s1) + (s2 + s3));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double sum(const double* a, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i];
        s1 += a[i + 1];
        s2 += a[i + 2];
        s3 += a[i + 3];
    }
    double s = ((s0 + s1) + (s2 + s3));
    for (; i < n; ++i) s += a[i];
    return s;
}
#endif

namespace detail {

// Fixed n = NV*8 so the accumulator tile stays in vector registers across
// the whole k loop; four A rows share each B row load.
template <bool Acc, int NV>
inline void gemm_fixn(const double* A, const double* B, double* C,
                      std::size_t m, std::size_t k) {
    constexpr int N = NV * 8;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* A0 = A + i * k;
        const double* A1 = A0 + k;
        const double* A2 = A1 + k;
        const double* A3 = A2 + k;
        double acc0[N] = {}, acc1[N] = {}, acc2[N] = {}, acc3[N] = {};
        for (std::size_t p = 0; p < k; ++p) {
            const double* Bp = B + p * N;
            double a0 = A0[p], a1 = A1[p], a2 = A2[p], a3 = A3[p];
            for (int j = 0; j < N; ++j) {
                acc0[j] += a0 * Bp[j];
                acc1[j] += a1 * Bp[j];
                acc2[j] += a2 * Bp[j];
                acc3[j] += a3 * Bp[j];
            }
        }
        double* C0 = C + i * N;
        for (int j = 0; j < N; ++j) {
            if constexpr (Acc) {
                C0[j] += acc0[j];
                C0[N + j] += acc1[j];
                C0[2 * N + j] += acc2[j];
                C0[3 * N + j] += acc3[j];
            } else {
                C0[j] = acc0[j];
                C0[N + j] = acc1[j];
                C0[2 * N + j] = acc2[j];
                C0[3 * N + j] = acc3[j];
            }
        }
    }
    for (; i < m; ++i) {
        const double* Ai = A + i * k;
        double acc[N] = {};
        for (std::size_t p = 0; p < k; ++p) {
            const double* Bp = B + p * N;
            double a = Ai[p];
            for (int j = 0; j < N; ++j) acc[j] += a * Bp[j];
        }
        double* Ci = C + i * N;
        for (int j = 0; j < N; ++j) {
            if constexpr (Acc) Ci[j] += acc[j];
            else Ci[j] = acc[j];
        }
    }
}

// Eight B rows per pass so the C read/write traffic amortizes even when n
// is a small head width. !Acc peels the first pass into plain stores.
template <bool Acc>
inline void gemm_generic(const double* A, const double* B, double* C,
                         std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* Ai = A + i * k;
        double* Ci = C + i * n;
        std::size_t p = 0;
        if constexpr (!Acc) {
            if (p + 8 <= k) {
                const double* Bp = B;
                double a0 = Ai[0], a1 = Ai[1], a2 = Ai[2], a3 = Ai[3];
                double a4 = Ai[4], a5 = Ai[5], a6 = Ai[6], a7 = Ai[7];
                for (std::size_t j = 0; j < n; ++j)
                    Ci[j] = a0 * Bp[j] + a1 * Bp[n + j] + a2 * Bp[2 * n + j] +
                            a3 * Bp[3 * n + j] + a4 * Bp[4 * n + j] + a5 * Bp[5 * n + j] +
                            a6 * Bp[6 * n + j] + a7 * Bp[7 * n + j];
                p = 8;
            } else if (p + 4 <= k) {
                const double* Bp = B;
                double a0 = Ai[0], a1 = Ai[1], a2 = Ai[2], a3 = Ai[3];
                for (std::size_t j = 0; j < n; ++j)
                    Ci[j] = a0 * Bp[j] + a1 * Bp[n + j] + a2 * Bp[2 * n + j] + a3 * Bp[3 * n + j];
                p = 4;
            } else if (k > 0) {
                double a0 = Ai[0];
                for (std::size_t j = 0; j < n; ++j) Ci[j] = a0 * B[j];
                p = 1;
            } else {
                for (std::size_t j = 0; j < n; ++j) Ci[j] = 0.0;
            }
        }
        for (; p + 8 <= k; p += 8) {
            const double* Bp = B + p * n;
            double a0 = Ai[p], a1 = Ai[p + 1], a2 = Ai[p + 2], a3 = Ai[p + 3];
            double a4 = Ai[p + 4], a5 = Ai[p + 5], a6 = Ai[p + 6], a7 = Ai[p + 7];
            for (std::size_t j = 0; j < n; ++j)
                Ci[j] += a0 * Bp[j] + a1 * Bp[n + j] + a2 * Bp[2 * n + j] +
                         a3 * Bp[3 * n + j] + a4 * Bp[4 * n + j] + a5 * Bp[5 * n + j] +
                         a6 * Bp[6 * n + j] + a7 * Bp[7 * n + j];
        }
        for (; p + 4 <= k; p += 4) {
            const double* Bp = B + p * n;
            double a0 = Ai[p], a1 = Ai[p + 1], a2 = Ai[p + 2], a3 = Ai[p + 3];
            for (std::size_t j = 0; j < n; ++j)
                Ci[j] += a0 * Bp[j] + a1 * Bp[n + j] + a2 * Bp[2 * n + j] + a3 * Bp[3 * n + j];
        }
        for (; p < k; ++p) axpy(Ai[p], B + p * n, Ci, n);
    }
}

template <bool Acc>
inline void gemm(const double* A, const double* B, double* C,
                 std::size_t m, std::size_t k, std::size_t n) {
    // the register tile only pays off once a C row spans several vectors
    if (n == 32) return gemm_fixn<Acc, 4>(A, B, C, m, k);
    gemm_generic<Acc>(A, B, C, m, k, n);
}

} // namespace detail

// C[m x n] += A[m x k] * B[k x n]
inline void gemm_acc(const double* A, const double* B, double* C,
                     std::size_t m, std::size_t k, std::size_t n) {
    detail::gemm<true>(A, B, C, m, k, n);
}

// C[m x n] = A[m x k] * B[k x n]; C may start uninitialized
inline void gemm_set(const double* A, const double* B, double* C,
                     std::size_t m, std::size_t k, std::size_t n) {
    detail::gemm<false>(A, B, C, m, k, n);
}

// C[m x n] += A[m x k] * B[n x k]^T via length-k dot products; only worth
// it when k spans many vector widths (otherwise transpose B and use gemm)
inline void gemm_nt_acc(const double* A, const double* B, double* C,
                        std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* Ai = A + i * k;
        double* Ci = C + i * n;
        for (std::size_t j = 0; j < n; ++j) Ci[j] += dot(Ai, B + j * k, k);
    }
}

// C[m x n] += A[k x m]^T * B[k x n]
#if defined(__GNUC__)
inline void gemm_tn_acc(const double* A, const double* B, double* C,
                        std::size_t m, std::size_t k, std::size_t n) {
    // 4x8 C tiles held in registers across the whole p walk, instead of
    // re-storing each C row k times; each element sums its p terms in
    // ascending order and folds into C once at the end
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            detail::v4d c00 = {0, 0, 0, 0}, c01 = c00, c10 = c00, c11 = c00;
            detail::v4d c20 = c00, c21 = c00, c30 = c00, c31 = c00;
            const double* Ap = A + i;
            const double* Bp = B + j;
            for (std::size_t p = 0; p < k; ++p) {
                detail::v4d b0 = detail::load4(Bp), b1 = detail::load4(Bp + 4);
                detail::v4d a0 = {Ap[0], Ap[0], Ap[0], Ap[0]};
                detail::v4d a1 = {Ap[1], Ap[1], Ap[1], Ap[1]};
                detail::v4d a2 = {Ap[2], Ap[2], Ap[2], Ap[2]};
                detail::v4d a3 = {Ap[3], Ap[3], Ap[3], Ap[3]};
                c00 += a0 * b0; c01 += a0 * b1;
                c10 += a1 * b0; c11 += a1 * b1;
                c20 += a2 * b0; c21 += a2 * b1;
                c30 += a3 * b0; c31 += a3 * b1;
                Ap += m; Bp += n;
            }
            double* C0 = C + i * n + j;
            double* C1 = C0 + n;
            double* C2 = C1 + n;
            double* C3 = C2 + n;
            for (int t = 0; t < 4; ++t) {
                C0[t] += c00[t]; C0[t + 4] += c01[t];
                C1[t] += c10[t]; C1[t + 4] += c11[t];
                C2[t] += c20[t]; C2[t + 4] += c21[t];
                C3[t] += c30[t]; C3[t + 4] += c31[t];
            }
        }
        for (; i + 2 <= m; i += 2) {
            detail::v4d c00 = {0, 0, 0, 0}, c01 = c00, c10 = c00, c11 = c00;
            const double* Ap = A + i;
            const double* Bp = B + j;
            for (std::size_t p = 0; p < k; ++p) {
                detail::v4d b0 = detail::load4(Bp), b1 = detail::load4(Bp + 4);
                detail::v4d a0 = {Ap[0], Ap[0], Ap[0], Ap[0]};
                detail::v4d a1 = {Ap[1], Ap[1], Ap[1], Ap[1]};
                c00 += a0 * b0; c01 += a0 * b1;
                c10 += a1 * b0; c11 += a1 * b1;
                Ap += m; Bp += n;
            }
            double* C0 = C + i * n + j;
            double* C1 = C0 + n;
            for (int t = 0; t < 4; ++t) {
                C0[t] += c00[t]; C0[t + 4] += c01[t];
                C1[t] += c10[t]; C1[t + 4] += c11[t];
            }
        }
        if (i < m) {
            detail::v4d c00 = {0, 0, 0, 0}, c01 = c00;
            const double* Ap = A + i;
            const double* Bp = B + j;
            for (std::size_t p = 0; p < k; ++p) {
                detail::v4d a0 = {Ap[0], Ap[0], Ap[0], Ap[0]};
                c00 += a0 * detail::load4(Bp);
                c01 += a0 * detail::load4(Bp + 4);
                Ap += m; Bp += n;
            }
            double* C0 = C + i * n + j;
            for (int t = 0; t < 4; ++t) { C0[t] += c00[t]; C0[t + 4] += c01[t]; }
        }
    }
    if (j < n)
        for (std::size_t p = 0; p < k; ++p) {
            const double* Ap = A + p * m;
            const double* Bp = B + p * n;
            for (std::size_t i = 0; i < m; ++i) axpy(Ap[i], Bp + j, C + i * n + j, n - j);
        }
}
#else
inline void gemm_tn_acc(const double* A, const double* B, double* C,
                        std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* Ap = A + p * m;
        const double* Bp = B + p * n;
        for (std::size_t i = 0; i < m; ++i) axpy(Ap[i], Bp, C + i * n, n);
    }
}
#endif

inline Tensor transpose(const Tensor& X) {
    std::size_t r = X.rows(), c = X.cols();
    Tensor T({c, r}, no_init);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) T[j * r + i] = X[i * c + j];
    return T;
}

// A[m x k] * B[k x n]
inline Tensor matmul(const Tensor& A, const Tensor& B) {
    std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor C({m, n}, no_init);
    gemm_set(A.data(), B.data(), C.data(), m, k, n);
    return C;
}

// A[m x k] * B[n x k]^T — transposing B up front keeps the accumulation
// loop on the wide contiguous axis, which beats length-k dot products for
// the narrow head widths this model runs at
inline Tensor matmul_nt(const Tensor& A, const Tensor& B) {
    Tensor Bt = transpose(B);
    return matmul(A, Bt);
}

// A[k x m]^T * B[k x n]
inline Tensor matmul_tn(const Tensor& A, const Tensor& B) {
    std::size_t k = A.rows(), m = A.cols(), n = B.cols();
    Tensor C({m, n});
    gemm_tn_acc(A.data(), B.data(), C.data(), m, k, n);
    return C;
}

} // namespace dywave::kernels
