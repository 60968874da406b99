#include "dywave/modwt.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dywave {

namespace {

// Daubechies D8 scaling filter rescaled by 1/sqrt(2), standard-table order.
// The values were produced by spectral factorization at 60-digit precision and
// rounded once to double; the load-time checks below would reject anything
// sloppier than ~1e-13.
constexpr double kDb4G[8] = {
    0.16290171402564918,   0.5054728575459144,   0.4461000691233798,
    -0.01978751311782232,  -0.13225358368451987, 0.021808150237088625,
    0.023251800535490884,  -0.007493494665180736,
};

void validate(const FilterPair& fp) {
    const auto& g = fp.g;
    const auto& h = fp.h;
    std::size_t k = g.size();
    if (h.size() != k) throw std::logic_error("filters: unequal tap counts");
    double sg = 0, sh = 0, sg2 = 0, sh2 = 0;
    for (std::size_t l = 0; l < k; ++l) {
        sg += g[l];
        sh += h[l];
        sg2 += g[l] * g[l];
        sh2 += h[l] * h[l];
    }
    double qmf = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        double sign = (l % 2 == 0) ? 1.0 : -1.0;
        qmf = std::max(qmf, std::abs(h[l] - sign * g[k - 1 - l]));
    }
    const double tol = 1e-12;
    if (std::abs(sh) > tol || std::abs(sg - 1.0) > tol || std::abs(sg2 - 0.5) > tol ||
        std::abs(sh2 - 0.5) > tol || qmf > tol)
        throw std::logic_error("filters: " + fp.name + " fails the filter identities");
}

} // namespace

FilterPair wavelet_filters(const std::string& name) {
    FilterPair fp;
    fp.name = name;
    if (name == "haar") {
        fp.g = {0.5, 0.5};
        fp.h = {0.5, -0.5};
    } else if (name == "db4") {
        fp.g.assign(kDb4G, kDb4G + 8);
        fp.h.resize(8);
        for (std::size_t l = 0; l < 8; ++l)
            fp.h[l] = ((l % 2 == 0) ? 1.0 : -1.0) * fp.g[7 - l];
    } else {
        throw std::invalid_argument("wavelet_filters: unknown basis '" + name + "'");
    }
    validate(fp);
    return fp;
}

namespace {

Tensor as_2d(const Tensor& X) {
    if (X.rank() == 1) return Tensor({1, X.dim(0)}, std::vector<double>(X.data(), X.data() + X.numel()));
    if (X.rank() == 2) return X;
    throw std::invalid_argument("modwt: signal must be C x L or a plain vector, got " +
                                X.shape_str());
}

} // namespace

WaveletStack modwt(const Tensor& Xin, std::size_t J, const FilterPair& fp) {
    Tensor X = as_2d(Xin);
    std::size_t C = X.dim(0), L = X.dim(1);
    if (L < 2) throw std::invalid_argument("modwt: sequence length must be at least 2");
    if (J < 1) throw std::invalid_argument("modwt: levels must be at least 1");
    if (J > 32) throw std::invalid_argument("modwt: more than 32 levels is not supported");
    if ((static_cast<std::size_t>(1) << J) > L)
        std::fprintf(stderr, "modwt: warning: 2^J = %zu exceeds L = %zu; deep levels wrap fully\n",
                     static_cast<std::size_t>(1) << J, L);

    std::size_t k = fp.g.size();
    WaveletStack st;
    st.levels = J;
    st.basis = fp.name;
    st.details.reserve(J);

    Tensor A = X;
    std::vector<std::size_t> off(k);
    for (std::size_t j = 1; j <= J; ++j) {
        std::size_t step = static_cast<std::size_t>(1) << (j - 1);
        for (std::size_t l = 0; l < k; ++l) off[l] = (step % L) * l % L;
        Tensor W({C, L}), Anext({C, L});
        for (std::size_t c = 0; c < C; ++c) {
            const double* a = A.data() + c * L;
            double* wrow = W.data() + c * L;
            double* vrow = Anext.data() + c * L;
            for (std::size_t t = 0; t < L; ++t) {
                double accW = 0.0, accV = 0.0;
                for (std::size_t l = 0; l < k; ++l) {
                    std::size_t idx = t >= off[l] ? t - off[l] : t + L - off[l];
                    accW += fp.h[l] * a[idx];
                    accV += fp.g[l] * a[idx];
                }
                wrow[t] = accW;
                vrow[t] = accV;
            }
        }
        st.details.push_back(std::move(W));
        A = std::move(Anext);
    }
    st.approx = std::move(A);
    return st;
}

Tensor imodwt(const WaveletStack& stack, const FilterPair& fp) {
    if (fp.name != stack.basis)
        throw std::invalid_argument("imodwt: stack basis '" + stack.basis +
                                    "' vs filters '" + fp.name + "'");
    std::size_t J = stack.levels;
    if (J == 0 || stack.details.size() != J)
        throw std::invalid_argument("imodwt: inconsistent level count");
    std::size_t C = stack.channels(), L = stack.length();
    for (const auto& d : stack.details)
        if (d.rank() != 2 || d.dim(0) != C || d.dim(1) != L)
            throw std::invalid_argument("imodwt: detail plane shape " + d.shape_str() +
                                        " does not match approximation " +
                                        stack.approx.shape_str());

    std::size_t k = fp.g.size();
    Tensor A = stack.approx;
    std::vector<std::size_t> off(k);
    for (std::size_t j = J; j >= 1; --j) {
        std::size_t step = static_cast<std::size_t>(1) << (j - 1);
        for (std::size_t l = 0; l < k; ++l) off[l] = (step % L) * l % L;
        const Tensor& W = stack.details[j - 1];
        Tensor Aprev({C, L});
        for (std::size_t c = 0; c < C; ++c) {
            const double* a = A.data() + c * L;
            const double* w = W.data() + c * L;
            double* out = Aprev.data() + c * L;
            for (std::size_t t = 0; t < L; ++t) {
                double acc = 0.0;
                for (std::size_t l = 0; l < k; ++l) {
                    std::size_t idx = t + off[l] < L ? t + off[l] : t + off[l] - L;
                    acc += fp.g[l] * a[idx] + fp.h[l] * w[idx];
                }
                out[t] = acc;
            }
        }
        A = std::move(Aprev);
    }
    return A;
}

StreamSplit partition_streams(const Tensor& Xin, const WaveletStack& stack, std::size_t K) {
    std::size_t J = stack.levels;
    if (K < 1 || K > J)
        throw std::invalid_argument("partition_streams: K = " + std::to_string(K) +
                                    " outside [1, " + std::to_string(J) + "]");
    Tensor X = as_2d(Xin);
    if (X.dim(0) != stack.channels() || X.dim(1) != stack.length())
        throw std::invalid_argument("partition_streams: signal " + X.shape_str() +
                                    " does not match stack " + stack.approx.shape_str());
    StreamSplit sp;
    sp.K = K;
    sp.detail.push_back(X);
    for (std::size_t j = 0; j < K; ++j) sp.detail.push_back(stack.details[j]);
    for (std::size_t j = K; j < J; ++j) sp.context.push_back(stack.details[j]);
    sp.context.push_back(stack.approx);
    return sp;
}

} // namespace dywave
