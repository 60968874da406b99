#include "dywave/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dywave/kernels.hpp"

namespace dywave::ops {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

Var add(const Var& a, const Var& b) {
    check_same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
    auto pa = a.node(), pb = b.node();
    return make_op("add", std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad) kernels::axpy(1.0, n.grad.data(), pa->ensure_grad().data(), n.grad.numel());
        if (pb->requires_grad) kernels::axpy(1.0, n.grad.data(), pb->ensure_grad().data(), n.grad.numel());
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    auto pa = a.node(), pb = b.node();
    return make_op("sub", std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad) kernels::axpy(1.0, n.grad.data(), pa->ensure_grad().data(), n.grad.numel());
        if (pb->requires_grad) kernels::axpy(-1.0, n.grad.data(), pb->ensure_grad().data(), n.grad.numel());
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
    auto pa = a.node(), pb = b.node();
    return make_op("mul", std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad) {
            double* g = pa->ensure_grad().data();
            for (std::size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            double* g = pb->ensure_grad().data();
            for (std::size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * pa->value[i];
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    auto pa = a.node();
    return make_op("scale", std::move(out), {pa}, [pa, c](Node& n) {
        if (pa->requires_grad) kernels::axpy(c, n.grad.data(), pa->ensure_grad().data(), n.grad.numel());
    });
}

Var gelu(const Var& x) {
    const Tensor& v = x.value();
    Tensor out(v.shape(), no_init);
    for (std::size_t i = 0; i < v.numel(); ++i)
        out[i] = 0.5 * v[i] * (1.0 + std::erf(v[i] * kInvSqrt2));
    auto px = x.node();
    return make_op("gelu", std::move(out), {px}, [px](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        const double* xv = px->value.data();
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            double cdf = 0.5 * (1.0 + std::erf(xv[i] * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv[i] * xv[i]);
            g[i] += n.grad[i] * (cdf + xv[i] * pdf);
        }
    });
}

Var vsum(const Var& x) {
    Tensor out = Tensor::scalar(kernels::sum(x.value().data(), x.value().numel()));
    auto px = x.node();
    return make_op("vsum", std::move(out), {px}, [px](Node& n) {
        if (!px->requires_grad) return;
        double g = n.grad[0];
        double* dst = px->ensure_grad().data();
        for (std::size_t i = 0; i < px->value.numel(); ++i) dst[i] += g;
    });
}

Var transpose(const Var& x) {
    Tensor out = kernels::transpose(x.value());
    auto px = x.node();
    return make_op("transpose", std::move(out), {px}, [px](Node& n) {
        if (!px->requires_grad) return;
        Tensor gt = kernels::transpose(n.grad);
        kernels::axpy(1.0, gt.data(), px->ensure_grad().data(), gt.numel());
    });
}

Var reshape(const Var& x, std::vector<std::size_t> shape) {
    if (Tensor::numel_of(shape) != x.value().numel())
        throw std::invalid_argument("reshape: element count mismatch for " +
                                    x.value().shape_str());
    Tensor out(std::move(shape), no_init);
    std::copy(x.value().data(), x.value().data() + x.value().numel(), out.data());
    auto px = x.node();
    return make_op("reshape", std::move(out), {px}, [px](Node& n) {
        if (px->requires_grad)
            kernels::axpy(1.0, n.grad.data(), px->ensure_grad().data(), n.grad.numel());
    });
}

Var concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
    std::size_t cols = xs[0].value().cols(), rows = 0;
    for (const auto& x : xs) {
        if (x.value().cols() != cols)
            throw std::invalid_argument("concat_rows: column mismatch " +
                                        std::to_string(x.value().cols()) + " vs " +
                                        std::to_string(cols));
        rows += x.value().rows();
    }
    Tensor out({rows, cols}, no_init);
    std::size_t r = 0;
    std::vector<NodePtr> parents;
    for (const auto& x : xs) {
        std::copy(x.value().data(), x.value().data() + x.value().numel(),
                  out.data() + r * cols);
        r += x.value().rows();
        parents.push_back(x.node());
    }
    auto ps = parents;
    return make_op("concat_rows", std::move(out), std::move(parents), [ps, cols](Node& n) {
        std::size_t r = 0;
        for (const auto& p : ps) {
            std::size_t cnt = p->value.numel();
            if (p->requires_grad)
                kernels::axpy(1.0, n.grad.data() + r * cols, p->ensure_grad().data(), cnt);
            r += p->value.rows();
        }
    });
}

Var slice_rows(const Var& x, std::size_t r0, std::size_t r1) {
    const Tensor& v = x.value();
    if (r0 >= r1 || r1 > v.rows())
        throw std::invalid_argument("slice_rows: bad range on " + v.shape_str());
    std::size_t cols = v.cols();
    Tensor out({r1 - r0, cols}, no_init);
    std::copy(v.data() + r0 * cols, v.data() + r1 * cols, out.data());
    auto px = x.node();
    return make_op("slice_rows", std::move(out), {px}, [px, r0, cols](Node& n) {
        if (px->requires_grad)
            kernels::axpy(1.0, n.grad.data(), px->ensure_grad().data() + r0 * cols,
                          n.grad.numel());
    });
}

Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: empty input");
    std::size_t rows = xs[0].value().rows(), cols = 0;
    for (const auto& x : xs) {
        if (x.value().rows() != rows)
            throw std::invalid_argument("concat_cols: row mismatch " +
                                        std::to_string(x.value().rows()) + " vs " +
                                        std::to_string(rows));
        cols += x.value().cols();
    }
    Tensor out({rows, cols}, no_init);
    std::size_t c = 0;
    std::vector<NodePtr> parents;
    for (const auto& x : xs) {
        std::size_t w = x.value().cols();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(x.value().data() + r * w, x.value().data() + (r + 1) * w,
                      out.data() + r * cols + c);
        c += w;
        parents.push_back(x.node());
    }
    auto ps = parents;
    return make_op("concat_cols", std::move(out), std::move(parents),
                   [ps, rows, cols](Node& n) {
        std::size_t c = 0;
        for (const auto& p : ps) {
            std::size_t w = p->value.cols();
            if (p->requires_grad) {
                double* g = p->ensure_grad().data();
                for (std::size_t r = 0; r < rows; ++r)
                    kernels::axpy(1.0, n.grad.data() + r * cols + c, g + r * w, w);
            }
            c += w;
        }
    });
}

Var slice_cols(const Var& x, std::size_t c0, std::size_t c1) {
    const Tensor& v = x.value();
    std::size_t rows = v.rows(), cols = v.cols();
    if (c0 >= c1 || c1 > cols)
        throw std::invalid_argument("slice_cols: bad range on " + v.shape_str());
    std::size_t w = c1 - c0;
    Tensor out({rows, w}, no_init);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy(v.data() + r * cols + c0, v.data() + r * cols + c1, out.data() + r * w);
    auto px = x.node();
    return make_op("slice_cols", std::move(out), {px}, [px, c0, rows, cols, w](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        for (std::size_t r = 0; r < rows; ++r)
            kernels::axpy(1.0, n.grad.data() + r * w, g + r * cols + c0, w);
    });
}

Var gather_cols(const Var& x, std::vector<std::size_t> idx) {
    const Tensor& v = x.value();
    std::size_t rows = v.rows(), cols = v.cols();
    for (std::size_t j : idx)
        if (j >= cols) throw std::out_of_range("gather_cols: index beyond " + v.shape_str());
    Tensor out({rows, idx.size()}, no_init);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out[r * idx.size() + j] = v[r * cols + idx[j]];
    auto px = x.node();
    return make_op("gather_cols", std::move(out), {px},
                   [px, idx = std::move(idx), rows, cols](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < idx.size(); ++j)
                g[r * cols + idx[j]] += n.grad[r * idx.size() + j];
    });
}

Var add_rowvec(const Var& X, const Var& b) {
    const Tensor& v = X.value();
    std::size_t T = v.rows(), d = v.cols();
    if (b.value().numel() != d)
        throw std::invalid_argument("add_rowvec: bias length " +
                                    std::to_string(b.value().numel()) + " vs cols " +
                                    std::to_string(d));
    Tensor out = v;
    for (std::size_t t = 0; t < T; ++t)
        kernels::axpy(1.0, b.value().data(), out.data() + t * d, d);
    auto px = X.node(), pb = b.node();
    return make_op("add_rowvec", std::move(out), {px, pb}, [px, pb, T, d](Node& n) {
        if (px->requires_grad)
            kernels::axpy(1.0, n.grad.data(), px->ensure_grad().data(), n.grad.numel());
        if (pb->requires_grad) {
            double* g = pb->ensure_grad().data();
            for (std::size_t t = 0; t < T; ++t)
                kernels::axpy(1.0, n.grad.data() + t * d, g, d);
        }
    });
}

Var add_colvec(const Var& X, const Var& b) {
    const Tensor& v = X.value();
    std::size_t R = v.rows(), C = v.cols();
    if (b.value().numel() != R)
        throw std::invalid_argument("add_colvec: bias length " +
                                    std::to_string(b.value().numel()) + " vs rows " +
                                    std::to_string(R));
    Tensor out = v;
    for (std::size_t r = 0; r < R; ++r) {
        double bv = b.value()[r];
        double* row = out.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) row[c] += bv;
    }
    auto px = X.node(), pb = b.node();
    return make_op("add_colvec", std::move(out), {px, pb}, [px, pb, R, C](Node& n) {
        if (px->requires_grad)
            kernels::axpy(1.0, n.grad.data(), px->ensure_grad().data(), n.grad.numel());
        if (pb->requires_grad) {
            double* g = pb->ensure_grad().data();
            for (std::size_t r = 0; r < R; ++r)
                g[r] += kernels::sum(n.grad.data() + r * C, C);
        }
    });
}

Var matmul(const Var& A, const Var& B) {
    const Tensor& a = A.value();
    const Tensor& b = B.value();
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()));
    Tensor out = kernels::matmul(a, b);
    auto pa = A.node(), pb = B.node();
    return make_op("matmul", std::move(out), {pa, pb}, [pa, pb](Node& n) {
        std::size_t m = n.grad.rows(), nn = n.grad.cols(), k = pa->value.cols();
        if (pa->requires_grad) {
            if (nn >= 48) {
                kernels::gemm_nt_acc(n.grad.data(), pb->value.data(),
                                     pa->ensure_grad().data(), m, nn, k);
            } else {
                Tensor bt = kernels::transpose(pb->value);
                kernels::gemm_acc(n.grad.data(), bt.data(), pa->ensure_grad().data(),
                                  m, nn, k);
            }
        }
        if (pb->requires_grad)
            kernels::gemm_tn_acc(pa->value.data(), n.grad.data(), pb->ensure_grad().data(),
                                 k, m, nn);
    });
}

Var matmul_nt(const Var& A, const Var& B) {
    const Tensor& a = A.value();
    const Tensor& b = B.value();
    if (a.cols() != b.cols())
        throw std::invalid_argument("matmul_nt: inner dims " + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.cols()));
    Tensor out = kernels::matmul_nt(a, b);
    auto pa = A.node(), pb = B.node();
    return make_op("matmul_nt", std::move(out), {pa, pb}, [pa, pb](Node& n) {
        std::size_t m = n.grad.rows(), nn = n.grad.cols(), k = pa->value.cols();
        if (pa->requires_grad)
            kernels::gemm_acc(n.grad.data(), pb->value.data(), pa->ensure_grad().data(),
                              m, nn, k);
        if (pb->requires_grad)
            kernels::gemm_tn_acc(n.grad.data(), pa->value.data(), pb->ensure_grad().data(),
                                 nn, m, k);
    });
}

Var affine_nt(const Var& X, const Var& W, const Var& b) {
    const Tensor& x = X.value();
    const Tensor& w = W.value();
    std::size_t T = x.rows(), k = x.cols(), nOut = w.rows();
    if (w.cols() != k)
        throw std::invalid_argument("affine_nt: inner dims " + std::to_string(k) + " vs " +
                                    std::to_string(w.cols()));
    if (b.value().numel() != nOut)
        throw std::invalid_argument("affine_nt: bias length " +
                                    std::to_string(b.value().numel()) + " vs width " +
                                    std::to_string(nOut));
    Tensor wt = kernels::transpose(w);
    Tensor out({T, nOut}, no_init);
    // seeding each row with the bias replaces both the zero-fill and a
    // separate broadcast pass
    for (std::size_t t = 0; t < T; ++t)
        std::copy(b.value().data(), b.value().data() + nOut, out.data() + t * nOut);
    kernels::gemm_acc(x.data(), wt.data(), out.data(), T, k, nOut);
    auto px = X.node(), pw = W.node(), pb = b.node();
    return make_op("affine_nt", std::move(out), {px, pw, pb},
                   [px, pw, pb, T, k, nOut](Node& n) {
        const double* g = n.grad.data();
        if (px->requires_grad)
            kernels::gemm_acc(g, pw->value.data(), px->ensure_grad().data(), T, nOut, k);
        if (pw->requires_grad)
            kernels::gemm_tn_acc(g, px->value.data(), pw->ensure_grad().data(), nOut, T, k);
        if (pb->requires_grad) {
            double* gb = pb->ensure_grad().data();
            for (std::size_t t = 0; t < T; ++t) kernels::axpy(1.0, g + t * nOut, gb, nOut);
        }
    });
}

Var affine_feat(const Var& W, const Var& X, const Var& b) {
    const Tensor& w = W.value();
    const Tensor& x = X.value();
    std::size_t R = w.rows(), k = w.cols(), N = x.cols();
    if (x.rows() != k)
        throw std::invalid_argument("affine_feat: inner dims " + std::to_string(k) + " vs " +
                                    std::to_string(x.rows()));
    if (b.value().numel() != R)
        throw std::invalid_argument("affine_feat: bias length " +
                                    std::to_string(b.value().numel()) + " vs rows " +
                                    std::to_string(R));
    Tensor out({R, N}, no_init);
    for (std::size_t r = 0; r < R; ++r)
        std::fill(out.data() + r * N, out.data() + (r + 1) * N, b.value()[r]);
    kernels::gemm_acc(w.data(), x.data(), out.data(), R, k, N);
    auto pw = W.node(), px = X.node(), pb = b.node();
    return make_op("affine_feat", std::move(out), {pw, px, pb},
                   [pw, px, pb, R, k, N](Node& n) {
        const double* g = n.grad.data();
        if (pw->requires_grad) {
            Tensor xt = kernels::transpose(px->value);
            kernels::gemm_acc(g, xt.data(), pw->ensure_grad().data(), R, N, k);
        }
        if (px->requires_grad)
            kernels::gemm_tn_acc(pw->value.data(), g, px->ensure_grad().data(), k, R, N);
        if (pb->requires_grad) {
            double* gb = pb->ensure_grad().data();
            for (std::size_t r = 0; r < R; ++r) gb[r] += kernels::sum(g + r * N, N);
        }
    });
}

namespace {

// rows of src columns [c0, c0+w) copied into a compact [T x w] block,
// optionally pre-scaled
inline void pack_cols(const Tensor& src, std::size_t c0, std::size_t w, double s,
                      double* dst) {
    std::size_t T = src.rows(), d = src.cols();
    for (std::size_t t = 0; t < T; ++t) {
        const double* row = src.data() + t * d + c0;
        double* out = dst + t * w;
        if (s == 1.0)
            std::copy(row, row + w, out);
        else
            for (std::size_t j = 0; j < w; ++j) out[j] = s * row[j];
    }
}

// same column block, laid out [w x T] for use as the transposed factor
inline void pack_cols_t(const Tensor& src, std::size_t c0, std::size_t w, double* dst) {
    std::size_t T = src.rows(), d = src.cols();
    for (std::size_t t = 0; t < T; ++t) {
        const double* row = src.data() + t * d + c0;
        for (std::size_t j = 0; j < w; ++j) dst[j * T + t] = row[j];
    }
}

inline void softmax_row_inplace(double* row, std::size_t n) {
    double m = row[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - m);
        s += row[j];
    }
    double inv = 1.0 / s;
    for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
}

} // namespace

Var mha(const Var& Q, const Var& K, const Var& V, std::size_t heads) {
    const Tensor& q = Q.value();
    const Tensor& kv = K.value();
    const Tensor& vv = V.value();
    if (q.rank() != 2 || !q.same_shape(kv) || !q.same_shape(vv))
        throw std::invalid_argument("mha: Q/K/V must share a T x d shape, got " +
                                    q.shape_str() + " " + kv.shape_str() + " " +
                                    vv.shape_str());
    std::size_t T = q.dim(0), d = q.dim(1);
    if (heads == 0 || d % heads != 0)
        throw std::invalid_argument("mha: width " + std::to_string(d) +
                                    " not divisible by " + std::to_string(heads) + " heads");
    std::size_t dh = d / heads;
    double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor out({T, d}, no_init);
    auto probs = std::make_shared<Tensor>(Tensor({heads * T, T}, no_init));
    Tensor qc({T, dh}, no_init), kt({dh, T}, no_init), vc({T, dh}, no_init);
    Tensor oc({T, dh}, no_init);
    for (std::size_t h = 0; h < heads; ++h) {
        pack_cols(q, h * dh, dh, sc, qc.data());
        pack_cols_t(kv, h * dh, dh, kt.data());
        pack_cols(vv, h * dh, dh, 1.0, vc.data());
        double* P = probs->data() + h * T * T;
        kernels::gemm_set(qc.data(), kt.data(), P, T, dh, T);
        for (std::size_t t = 0; t < T; ++t) softmax_row_inplace(P + t * T, T);
        kernels::gemm_set(P, vc.data(), oc.data(), T, T, dh);
        for (std::size_t t = 0; t < T; ++t)
            std::copy(oc.data() + t * dh, oc.data() + (t + 1) * dh,
                      out.data() + t * d + h * dh);
    }

    auto pq = Q.node(), pk = K.node(), pv = V.node();
    return make_op("mha", std::move(out), {pq, pk, pv},
                   [pq, pk, pv, probs, T, d, dh, heads, sc](Node& n) {
        Tensor gc({T, dh}, no_init), cc({T, dh}, no_init), pack({T, dh}, no_init);
        Tensor packt({dh, T}, no_init);
        Tensor dP({T, T}, no_init);
        for (std::size_t h = 0; h < heads; ++h) {
            const double* P = probs->data() + h * T * T;
            pack_cols(n.grad, h * dh, dh, 1.0, gc.data());
            // dP = G Vh^T
            pack_cols_t(pv->value, h * dh, dh, packt.data());
            kernels::gemm_set(gc.data(), packt.data(), dP.data(), T, dh, T);
            if (pv->requires_grad) {
                // dVh = P^T G
                Tensor dv({T, dh});
                kernels::gemm_tn_acc(P, gc.data(), dv.data(), T, T, dh);
                double* gv = pv->ensure_grad().data();
                for (std::size_t t = 0; t < T; ++t)
                    kernels::axpy(1.0, dv.data() + t * dh, gv + t * d + h * dh, dh);
            }
            // softmax backward, in place on dP
            for (std::size_t t = 0; t < T; ++t) {
                double* dr = dP.data() + t * T;
                const double* pr = P + t * T;
                double inner = kernels::dot(dr, pr, T);
                for (std::size_t j = 0; j < T; ++j) dr[j] = pr[j] * (dr[j] - inner);
            }
            if (pq->requires_grad) {
                // dQh = sc * dS Kh
                pack_cols(pk->value, h * dh, dh, 1.0, pack.data());
                kernels::gemm_set(dP.data(), pack.data(), cc.data(), T, T, dh);
                double* gq = pq->ensure_grad().data();
                for (std::size_t t = 0; t < T; ++t)
                    kernels::axpy(sc, cc.data() + t * dh, gq + t * d + h * dh, dh);
            }
            if (pk->requires_grad) {
                // dKh = dS^T (sc Qh)
                pack_cols(pq->value, h * dh, dh, sc, pack.data());
                Tensor dk({T, dh});
                kernels::gemm_tn_acc(dP.data(), pack.data(), dk.data(), T, T, dh);
                double* gk = pk->ensure_grad().data();
                for (std::size_t t = 0; t < T; ++t)
                    kernels::axpy(1.0, dk.data() + t * dh, gk + t * d + h * dh, dh);
            }
        }
    });
}

Var conv1d(const Var& X, const Var& W, const Var& bias) {
    const Tensor& x = X.value();
    const Tensor& w = W.value();
    if (x.rank() != 2) throw std::invalid_argument("conv1d: input must be Cin x L, got " + x.shape_str());
    if (w.rank() != 3) throw std::invalid_argument("conv1d: kernels must be Cout x Cin x k, got " + w.shape_str());
    std::size_t Cin = x.dim(0), L = x.dim(1);
    std::size_t Cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != Cin)
        throw std::invalid_argument("conv1d: kernel input channels " + std::to_string(w.dim(1)) +
                                    " vs signal channels " + std::to_string(Cin));
    if (bias.defined() && bias.value().numel() != Cout)
        throw std::invalid_argument("conv1d: bias length " + std::to_string(bias.value().numel()) +
                                    " vs output channels " + std::to_string(Cout));
    std::size_t off = k / 2;
    // interior range where every tap lands in-bounds
    std::size_t lo = std::min(L, k > off + 1 ? k - 1 - off : 0);
    std::size_t hi = L > off ? std::max(L - off, lo) : lo;
    Tensor out({Cout, L}, no_init);
    for (std::size_t o = 0; o < Cout; ++o) {
        double* orow = out.data() + o * L;
        double bv = bias.defined() ? bias.value()[o] : 0.0;
        std::fill(orow, orow + L, bv);
        for (std::size_t i = 0; i < Cin; ++i) {
            const double* xrow = x.data() + i * L;
            const double* wk = w.data() + (o * Cin + i) * k;
            if (k == 5) {
                // fused taps: one pass over the row instead of five
                double w0 = wk[0], w1 = wk[1], w2 = wk[2], w3 = wk[3], w4 = wk[4];
                for (std::size_t t = lo; t < hi; ++t)
                    orow[t] += w0 * xrow[t - 2] + w1 * xrow[t - 1] + w2 * xrow[t] +
                               w3 * xrow[t + 1] + w4 * xrow[t + 2];
                for (std::size_t t = 0; t < lo; ++t)
                    for (std::size_t l = off > t ? off - t : 0; l < k && t + l < L + off; ++l)
                        orow[t] += wk[l] * xrow[t + l - off];
                for (std::size_t t = hi; t < L; ++t)
                    for (std::size_t l = off > t ? off - t : 0; l < k && t + l < L + off; ++l)
                        orow[t] += wk[l] * xrow[t + l - off];
                continue;
            }
            for (std::size_t l = 0; l < k; ++l) {
                // out[o,t] += w * x[i, t + l - off] over valid t
                std::ptrdiff_t s = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(off);
                std::size_t t0 = s < 0 ? static_cast<std::size_t>(-s) : 0;
                std::size_t t1 = s > 0 ? L - static_cast<std::size_t>(s) : L;
                if (t0 >= t1) continue;
                kernels::axpy(wk[l], xrow + t0 + s, orow + t0, t1 - t0);
            }
        }
    }
    auto px = X.node(), pw = W.node();
    auto pb = bias.defined() ? bias.node() : NodePtr();
    std::vector<NodePtr> parents{px, pw};
    if (pb) parents.push_back(pb);
    return make_op("conv1d", std::move(out), std::move(parents),
                   [px, pw, pb, Cin, Cout, L, k, off](Node& n) {
        const Tensor& g = n.grad;
        double* gx = px->requires_grad ? px->ensure_grad().data() : nullptr;
        double* gw = pw->requires_grad ? pw->ensure_grad().data() : nullptr;
        std::size_t lo = std::min(L, k > off + 1 ? k - 1 - off : 0);
        std::size_t hi = L > off ? std::max(L - off, lo) : lo;
        // input-channel outer so the gx row being accumulated stays cached
        // across all Cout*k scatter passes
        for (std::size_t i = 0; i < Cin; ++i) {
            const double* xrow = px->value.data() + i * L;
            double* gxrow = gx ? gx + i * L : nullptr;
            for (std::size_t o = 0; o < Cout; ++o) {
                const double* grow = g.data() + o * L;
                const double* wk = pw->value.data() + (o * Cin + i) * k;
                if (gxrow && k == 5) {
                    double w0 = wk[0], w1 = wk[1], w2 = wk[2], w3 = wk[3], w4 = wk[4];
                    for (std::size_t u = lo; u < hi; ++u)
                        gxrow[u] += w0 * grow[u + 2] + w1 * grow[u + 1] + w2 * grow[u] +
                                    w3 * grow[u - 1] + w4 * grow[u - 2];
                    for (std::size_t u = 0; u < lo; ++u)
                        for (std::size_t l = 0; l < k; ++l)
                            if (u + off >= l && u + off - l < L)
                                gxrow[u] += wk[l] * grow[u + off - l];
                    for (std::size_t u = hi; u < L; ++u)
                        for (std::size_t l = 0; l < k; ++l)
                            if (u + off >= l && u + off - l < L)
                                gxrow[u] += wk[l] * grow[u + off - l];
                } else if (gxrow) {
                    for (std::size_t l = 0; l < k; ++l) {
                        std::ptrdiff_t s = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(off);
                        std::size_t t0 = s < 0 ? static_cast<std::size_t>(-s) : 0;
                        std::size_t t1 = s > 0 ? L - static_cast<std::size_t>(s) : L;
                        if (t0 >= t1) continue;
                        kernels::axpy(wk[l], grow + t0, gxrow + t0 + s, t1 - t0);
                    }
                }
                if (gw) {
                    // one correlation per tap over the full valid overlap;
                    // these ride the wide dot, and after the first tap both
                    // rows are L1-resident
                    double* gwk = gw + (o * Cin + i) * k;
                    for (std::size_t l = 0; l < k; ++l) {
                        std::ptrdiff_t s = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(off);
                        std::size_t t0 = s < 0 ? static_cast<std::size_t>(-s) : 0;
                        std::size_t t1 = s > 0 ? L - static_cast<std::size_t>(s) : L;
                        if (t0 >= t1) continue;
                        gwk[l] += kernels::dot(grow + t0, xrow + t0 + s, t1 - t0);
                    }
                }
            }
        }
        if (pb && pb->requires_grad) {
            double* gb = pb->ensure_grad().data();
            for (std::size_t o = 0; o < Cout; ++o) gb[o] += kernels::sum(g.data() + o * L, L);
        }
    });
}

Var conv1d_transpose(const Var& X, const Var& W, std::size_t stride) {
    if (stride < 1) throw std::invalid_argument("conv1d_transpose: stride must be positive");
    const Tensor& x = X.value();
    const Tensor& w = W.value();
    if (x.rank() != 2) throw std::invalid_argument("conv1d_transpose: input must be Cin x T, got " + x.shape_str());
    if (w.rank() != 3) throw std::invalid_argument("conv1d_transpose: kernels must be Cin x Cout x k, got " + w.shape_str());
    std::size_t Cin = x.dim(0), T = x.dim(1);
    std::size_t Cout = w.dim(1), k = w.dim(2);
    if (w.dim(0) != Cin)
        throw std::invalid_argument("conv1d_transpose: kernel input channels " +
                                    std::to_string(w.dim(0)) + " vs signal channels " +
                                    std::to_string(Cin));
    std::size_t Lout = stride * T;
    Tensor out({Cout, Lout});
    for (std::size_t i = 0; i < Cin; ++i) {
        const double* xrow = x.data() + i * T;
        for (std::size_t o = 0; o < Cout; ++o) {
            double* orow = out.data() + o * Lout;
            const double* wk = w.data() + (i * Cout + o) * k;
            for (std::size_t l = 0; l < k; ++l) {
                double wv = wk[l];
                for (std::size_t t = 0; t < T; ++t) {
                    std::size_t pos = t * stride + l;
                    if (pos < Lout) orow[pos] += wv * xrow[t];
                }
            }
        }
    }
    auto px = X.node(), pw = W.node();
    return make_op("conv1d_transpose", std::move(out), {px, pw},
                   [px, pw, Cin, Cout, T, k, stride, Lout](Node& n) {
        const Tensor& g = n.grad;
        for (std::size_t i = 0; i < Cin; ++i) {
            const double* xrow = px->value.data() + i * T;
            for (std::size_t o = 0; o < Cout; ++o) {
                const double* grow = g.data() + o * Lout;
                const double* wk = pw->value.data() + (i * Cout + o) * k;
                for (std::size_t l = 0; l < k; ++l) {
                    if (px->requires_grad) {
                        double* dx = px->ensure_grad().data() + i * T;
                        double wv = wk[l];
                        for (std::size_t t = 0; t < T; ++t) {
                            std::size_t pos = t * stride + l;
                            if (pos < Lout) dx[t] += wv * grow[pos];
                        }
                    }
                    if (pw->requires_grad) {
                        double acc = 0.0;
                        for (std::size_t t = 0; t < T; ++t) {
                            std::size_t pos = t * stride + l;
                            if (pos < Lout) acc += xrow[t] * grow[pos];
                        }
                        pw->ensure_grad()[(i * Cout + o) * k + l] += acc;
                    }
                }
            }
        }
    });
}

Var avg_pool1d(const Var& X, std::size_t stride) {
    if (stride < 1) throw std::invalid_argument("avg_pool1d: stride must be positive");
    const Tensor& x = X.value();
    std::size_t R = x.rows(), L = x.cols();
    std::size_t W = (L + stride - 1) / stride;
    Tensor out({R, W}, no_init);
    for (std::size_t r = 0; r < R; ++r) {
        const double* row = x.data() + r * L;
        for (std::size_t w = 0; w < W; ++w) {
            std::size_t a = w * stride, b = std::min(L, a + stride);
            out[r * W + w] = kernels::sum(row + a, b - a) / static_cast<double>(b - a);
        }
    }
    auto px = X.node();
    return make_op("avg_pool1d", std::move(out), {px}, [px, R, L, W, stride](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t w = 0; w < W; ++w) {
                std::size_t a = w * stride, b = std::min(L, a + stride);
                double gv = n.grad[r * W + w] / static_cast<double>(b - a);
                for (std::size_t t = a; t < b; ++t) g[r * L + t] += gv;
            }
    });
}

namespace {

// per-output (source index, weight) pairs shared by forward and backward
std::vector<std::vector<std::pair<std::size_t, double>>> resample_table(std::size_t T,
                                                                        std::size_t target) {
    std::vector<std::vector<std::pair<std::size_t, double>>> tab(target);
    if (target == T) {
        for (std::size_t j = 0; j < target; ++j) tab[j] = {{j, 1.0}};
    } else if (target > T) {
        if (T == 1) {
            for (std::size_t j = 0; j < target; ++j) tab[j] = {{0, 1.0}};
        } else {
            double step = static_cast<double>(T - 1) / static_cast<double>(target - 1);
            for (std::size_t j = 0; j < target; ++j) {
                double pos = step * static_cast<double>(j);
                std::size_t i0 = std::min(static_cast<std::size_t>(pos), T - 2);
                double frac = pos - static_cast<double>(i0);
                tab[j] = {{i0, 1.0 - frac}, {i0 + 1, frac}};
            }
        }
    } else {
        for (std::size_t j = 0; j < target; ++j) {
            std::size_t a = j * T / target, b = (j + 1) * T / target;
            double w = 1.0 / static_cast<double>(b - a);
            for (std::size_t t = a; t < b; ++t) tab[j].emplace_back(t, w);
        }
    }
    return tab;
}

} // namespace

Var resample(const Var& X, std::size_t target_len) {
    if (target_len < 1) throw std::invalid_argument("resample: target length must be positive");
    const Tensor& x = X.value();
    std::size_t R = x.rows(), T = x.cols();
    auto tab = resample_table(T, target_len);
    Tensor out({R, target_len}, no_init);
    for (std::size_t r = 0; r < R; ++r) {
        const double* row = x.data() + r * T;
        for (std::size_t j = 0; j < target_len; ++j) {
            double v = 0.0;
            for (auto [s, w] : tab[j]) v += w * row[s];
            out[r * target_len + j] = v;
        }
    }
    auto px = X.node();
    return make_op("resample", std::move(out), {px},
                   [px, R, T, target_len, tab = std::move(tab)](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t j = 0; j < target_len; ++j) {
                double gv = n.grad[r * target_len + j];
                for (auto [s, w] : tab[j]) g[r * T + s] += w * gv;
            }
    });
}

Var layernorm_rows(const Var& X, const Var& gamma, const Var& beta, double eps) {
    const Tensor& x = X.value();
    std::size_t T = x.rows(), d = x.cols();
    if (gamma.value().numel() != d || beta.value().numel() != d)
        throw std::invalid_argument("layernorm_rows: scale/shift length vs feature dim " +
                                    std::to_string(d));
    Tensor out({T, d}, no_init);
    // cache per-row inv-std and normalized values for backward
    auto xhat = std::make_shared<Tensor>(Tensor({T, d}, no_init));
    auto istd = std::make_shared<std::vector<double>>(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double* row = x.data() + t * d;
        double mean = kernels::sum(row, d) / static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double is = 1.0 / std::sqrt(var + eps);
        (*istd)[t] = is;
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (row[j] - mean) * is;
            (*xhat)[t * d + j] = xh;
            out[t * d + j] = gamma.value()[j] * xh + beta.value()[j];
        }
    }
    auto px = X.node(), pg = gamma.node(), pb = beta.node();
    return make_op("layernorm_rows", std::move(out), {px, pg, pb},
                   [px, pg, pb, T, d, xhat, istd](Node& n) {
        for (std::size_t t = 0; t < T; ++t) {
            const double* gy = n.grad.data() + t * d;
            const double* xh = xhat->data() + t * d;
            if (pg->requires_grad) {
                double* gg = pg->ensure_grad().data();
                for (std::size_t j = 0; j < d; ++j) gg[j] += gy[j] * xh[j];
            }
            if (pb->requires_grad) {
                double* gb = pb->ensure_grad().data();
                for (std::size_t j = 0; j < d; ++j) gb[j] += gy[j];
            }
            if (px->requires_grad) {
                double m1 = 0.0, m2 = 0.0; // mean(gxh), mean(gxh * xhat)
                const double* gam = pg->value.data();
                for (std::size_t j = 0; j < d; ++j) {
                    double gxh = gy[j] * gam[j];
                    m1 += gxh;
                    m2 += gxh * xh[j];
                }
                m1 /= static_cast<double>(d);
                m2 /= static_cast<double>(d);
                double is = (*istd)[t];
                double* gx = px->ensure_grad().data() + t * d;
                for (std::size_t j = 0; j < d; ++j)
                    gx[j] += is * (gy[j] * gam[j] - m1 - xh[j] * m2);
            }
        }
    });
}

Var softmax_rows(const Var& X) {
    const Tensor& x = X.value();
    std::size_t T = x.rows(), d = x.cols();
    Tensor out({T, d}, no_init);
    for (std::size_t t = 0; t < T; ++t) {
        const double* row = x.data() + t * d;
        double m = row[0];
        for (std::size_t j = 1; j < d; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double e = std::exp(row[j] - m);
            out[t * d + j] = e;
            z += e;
        }
        double iz = 1.0 / z;
        for (std::size_t j = 0; j < d; ++j) out[t * d + j] *= iz;
    }
    auto px = X.node();
    return make_op("softmax_rows", std::move(out), {px}, [px, T, d](Node& n) {
        if (!px->requires_grad) return;
        double* gx = px->ensure_grad().data();
        for (std::size_t t = 0; t < T; ++t) {
            const double* gy = n.grad.data() + t * d;
            const double* yr = n.value.data() + t * d; // softmax output is its own jacobian input
            double dotv = kernels::dot(gy, yr, d);
            for (std::size_t j = 0; j < d; ++j) gx[t * d + j] += yr[j] * (gy[j] - dotv);
        }
    });
}

Var mean_rows(const Var& X) {
    const Tensor& x = X.value();
    std::size_t T = x.rows(), d = x.cols();
    Tensor out({1, d});
    for (std::size_t t = 0; t < T; ++t) kernels::axpy(1.0, x.data() + t * d, out.data(), d);
    double inv = 1.0 / static_cast<double>(T);
    for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
    auto px = X.node();
    return make_op("mean_rows", std::move(out), {px}, [px, T, d, inv](Node& n) {
        if (!px->requires_grad) return;
        double* g = px->ensure_grad().data();
        for (std::size_t t = 0; t < T; ++t)
            kernels::axpy(inv, n.grad.data(), g + t * d, d);
    });
}

namespace {

struct CosParts {
    double s, nu, nv, den, c;
    bool degenerate;
};

CosParts cos_parts(const double* u, const double* v, std::size_t d, std::size_t su,
                   std::size_t sv) {
    double s = 0, uu = 0, vv = 0;
    for (std::size_t j = 0; j < d; ++j) {
        double a = u[j * su], b = v[j * sv];
        s += a * b;
        uu += a * a;
        vv += b * b;
    }
    CosParts p;
    p.s = s;
    p.nu = std::sqrt(uu);
    p.nv = std::sqrt(vv);
    p.den = p.nu * p.nv + kCosEps;
    p.degenerate = (p.nu == 0.0 || p.nv == 0.0);
    p.c = p.degenerate ? 0.0 : s / p.den;
    return p;
}

// accumulate d(cos)/du and d(cos)/dv scaled by g
void cos_backward(const CosParts& p, const double* u, const double* v, double* du, double* dv,
                  std::size_t d, std::size_t su, std::size_t sv, double g, bool want_u,
                  bool want_v) {
    if (p.degenerate) return; // flat extension of the zero-norm guard
    double inv_den = 1.0 / p.den;
    double cu = p.s * p.nv / (p.nu * p.den * p.den);
    double cv = p.s * p.nu / (p.nv * p.den * p.den);
    for (std::size_t j = 0; j < d; ++j) {
        double a = u[j * su], b = v[j * sv];
        if (want_u) du[j * su] += g * (b * inv_den - a * cu);
        if (want_v) dv[j * sv] += g * (a * inv_den - b * cv);
    }
}

} // namespace

Var cosine_similarity(const Var& u, const Var& v) {
    check_same_shape("cosine_similarity", u.value(), v.value());
    std::size_t d = u.value().numel();
    CosParts p = cos_parts(u.value().data(), v.value().data(), d, 1, 1);
    auto pu = u.node(), pv = v.node();
    return make_op("cosine_similarity", Tensor::scalar(p.c), {pu, pv},
                   [pu, pv, d, p](Node& n) {
        cos_backward(p, pu->value.data(), pv->value.data(),
                     pu->requires_grad ? pu->ensure_grad().data() : nullptr,
                     pv->requires_grad ? pv->ensure_grad().data() : nullptr, d, 1, 1,
                     n.grad[0], pu->requires_grad, pv->requires_grad);
    });
}

Var adjacent_cosine_gap(const Var& K, const Var& Q) {
    const Tensor& kv = K.value();
    const Tensor& qv = Q.value();
    check_same_shape("adjacent_cosine_gap", kv, qv);
    std::size_t dk = kv.rows(), L = kv.cols();
    if (L < 2) throw std::invalid_argument("adjacent_cosine_gap: needs at least 2 timesteps");
    Tensor out({L}, no_init);
    auto parts = std::make_shared<std::vector<CosParts>>(L);
    out[0] = 0.0;
    for (std::size_t t = 1; t < L; ++t) {
        CosParts p = cos_parts(kv.data() + (t - 1), qv.data() + t, dk, L, L);
        (*parts)[t] = p;
        out[t] = 1.0 - p.c;
    }
    auto pk = K.node(), pq = Q.node();
    return make_op("adjacent_cosine_gap", std::move(out), {pk, pq},
                   [pk, pq, dk, L, parts](Node& n) {
        double* gk = pk->requires_grad ? pk->ensure_grad().data() : nullptr;
        double* gq = pq->requires_grad ? pq->ensure_grad().data() : nullptr;
        for (std::size_t t = 1; t < L; ++t) {
            double g = -n.grad[t]; // P = 1 - cos
            if (g == 0.0) continue;
            cos_backward((*parts)[t], pk->value.data() + (t - 1), pq->value.data() + t,
                         gk ? gk + (t - 1) : nullptr, gq ? gq + t : nullptr, dk, L, L, g,
                         gk != nullptr, gq != nullptr);
        }
    });
}

Var weighted_cluster_sum(const Var& EF, const Var& P,
                         const std::vector<std::size_t>& cluster_of,
                         std::size_t n_clusters, double eps, double fallback_below) {
    const Tensor& ef = EF.value();
    const Tensor& pv = P.value();
    std::size_t d = ef.rows(), L = ef.cols();
    if (pv.numel() != L)
        throw std::invalid_argument("weighted_cluster_sum: saliency length " +
                                    std::to_string(pv.numel()) + " vs timesteps " +
                                    std::to_string(L));
    if (cluster_of.size() != L)
        throw std::invalid_argument("weighted_cluster_sum: assignment length mismatch");
    std::vector<double> S(n_clusters, 0.0);
    std::vector<double> cnt(n_clusters, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
        std::size_t c = cluster_of[t];
        if (c >= n_clusters) throw std::out_of_range("weighted_cluster_sum: cluster index");
        S[c] += pv[t];
        cnt[c] += 1.0;
    }
    auto weights = std::make_shared<std::vector<double>>(L); // effective per-t weight
    std::vector<bool> fallback(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        if (cnt[c] == 0.0)
            throw std::invalid_argument("weighted_cluster_sum: empty cluster " + std::to_string(c));
        fallback[c] = S[c] < fallback_below;
    }
    for (std::size_t t = 0; t < L; ++t) {
        std::size_t c = cluster_of[t];
        (*weights)[t] = fallback[c] ? 1.0 / cnt[c] : pv[t] / (S[c] + eps);
    }
    Tensor out({d, n_clusters});
    for (std::size_t r = 0; r < d; ++r) {
        const double* row = ef.data() + r * L;
        double* orow = out.data() + r * n_clusters;
        for (std::size_t t = 0; t < L; ++t) orow[cluster_of[t]] += (*weights)[t] * row[t];
    }
    auto pe = EF.node(), pp = P.node();
    auto inv_s = std::make_shared<std::vector<double>>(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c)
        (*inv_s)[c] = fallback[c] ? 0.0 : 1.0 / (S[c] + eps);
    return make_op("weighted_cluster_sum", std::move(out), {pe, pp},
                   [pe, pp, d, L, n_clusters, cl = cluster_of, weights, inv_s](Node& n) {
        if (pe->requires_grad) {
            double* g = pe->ensure_grad().data();
            for (std::size_t r = 0; r < d; ++r) {
                const double* grow = n.grad.data() + r * n_clusters;
                double* gx = g + r * L;
                for (std::size_t t = 0; t < L; ++t) gx[t] += (*weights)[t] * grow[cl[t]];
            }
        }
        if (pp->requires_grad) {
            // dP_t = (EF[:,t] - EA[:,k]) . G[:,k] / (S_k + eps); zero under fallback
            double* gp = pp->ensure_grad().data();
            for (std::size_t t = 0; t < L; ++t) {
                std::size_t c = cl[t];
                double is = (*inv_s)[c];
                if (is == 0.0) continue;
                double acc = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    double gk = n.grad[r * n_clusters + c];
                    acc += (pe->value[r * L + t] - n.value[r * n_clusters + c]) * gk;
                }
                gp[t] += acc * is;
            }
        }
    });
}

Var cross_entropy_logits(const Var& logits, std::size_t label) {
    const Tensor& x = logits.value();
    std::size_t n = x.numel();
    if (label >= n)
        throw std::out_of_range("cross_entropy_logits: label " + std::to_string(label) +
                                " vs classes " + std::to_string(n));
    double m = x[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - m);
    double loss = m + std::log(z) - x[label];
    auto px = logits.node();
    return make_op("cross_entropy_logits", Tensor::scalar(loss), {px},
                   [px, label, m, z, n](Node& nd) {
        if (!px->requires_grad) return;
        double g = nd.grad[0];
        double* gx = px->ensure_grad().data();
        for (std::size_t j = 0; j < n; ++j) {
            double p = std::exp(px->value[j] - m) / z;
            gx[j] += g * (p - (j == label ? 1.0 : 0.0));
        }
    });
}

Var mse(const Var& a, const Var& b) {
    check_same_shape("mse", a.value(), b.value());
    std::size_t n = a.value().numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a.value()[i] - b.value()[i];
        acc += d * d;
    }
    double inv = 1.0 / static_cast<double>(n);
    auto pa = a.node(), pb = b.node();
    return make_op("mse", Tensor::scalar(acc * inv), {pa, pb}, [pa, pb, n, inv](Node& nd) {
        double g2 = 2.0 * inv * nd.grad[0];
        double* ga = pa->requires_grad ? pa->ensure_grad().data() : nullptr;
        double* gb = pb->requires_grad ? pb->ensure_grad().data() : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            double d = g2 * (pa->value[i] - pb->value[i]);
            if (ga) ga[i] += d;
            if (gb) gb[i] -= d;
        }
    });
}

} // namespace dywave::ops
