#include "dywave/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dywave {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
    if (has(name)) throw std::logic_error("params: duplicate name " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("params: unknown name " + name);
    return items_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("params: unknown name " + name);
    return items_[it->second].second;
}

ParamLeaves::ParamLeaves(const ParamStore& store, bool requires_grad) {
    items_.reserve(store.size());
    for (const auto& [name, t] : store.items()) {
        index_[name] = items_.size();
        items_.emplace_back(name, Var::leaf(t, requires_grad));
    }
}

const Var& ParamLeaves::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("leaves: unknown name " + name);
    return items_[it->second].second;
}

namespace nn {

Tensor glorot(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in,
              std::size_t fan_out) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rng.uniform_tensor(std::move(shape), -a, a);
}

Var linear_tokens(const Var& X, const Var& W, const Var& b) {
    return ops::affine_nt(X, W, b);
}

Var linear_feat(const Var& X, const Var& W, const Var& b) {
    return ops::affine_feat(W, X, b);
}

Var mlp_feat(const Var& X, const Var& W1, const Var& b1, const Var& W2, const Var& b2) {
    return linear_feat(ops::gelu(linear_feat(X, W1, b1)), W2, b2);
}

void register_attention_block(ParamStore& ps, const std::string& prefix, std::size_t d,
                              std::size_t d_ff, Rng& rng) {
    auto lin = [&](const std::string& n, std::size_t out, std::size_t in) {
        ps.add(prefix + "." + n + ".W", glorot(rng, {out, in}, in, out));
        ps.add(prefix + "." + n + ".b", Tensor::zeros({out}));
    };
    lin("q", d, d);
    lin("k", d, d);
    lin("v", d, d);
    lin("out", d, d);
    ps.add(prefix + ".ln1.g", Tensor::full({d}, 1.0));
    ps.add(prefix + ".ln1.b", Tensor::zeros({d}));
    ps.add(prefix + ".ln2.g", Tensor::full({d}, 1.0));
    ps.add(prefix + ".ln2.b", Tensor::zeros({d}));
    lin("ff1", d_ff, d);
    lin("ff2", d, d_ff);
}

Var attention_block(const Var& X, const ParamLeaves& pl, const std::string& prefix,
                    std::size_t heads) {
    std::size_t d = X.value().cols();
    if (heads == 0 || d % heads != 0)
        throw std::invalid_argument("attention_block: width " + std::to_string(d) +
                                    " not divisible by " + std::to_string(heads) + " heads");
    auto P = [&](const char* n) -> const Var& { return pl.at(prefix + "." + n); };

    Var h = ops::layernorm_rows(X, P("ln1.g"), P("ln1.b"));
    Var Q = linear_tokens(h, P("q.W"), P("q.b"));
    Var K = linear_tokens(h, P("k.W"), P("k.b"));
    Var V = linear_tokens(h, P("v.W"), P("v.b"));
    Var O = ops::mha(Q, K, V, heads);
    Var y = ops::add(X, linear_tokens(O, P("out.W"), P("out.b")));

    Var h2 = ops::layernorm_rows(y, P("ln2.g"), P("ln2.b"));
    Var ff = linear_tokens(ops::gelu(linear_tokens(h2, P("ff1.W"), P("ff1.b"))),
                           P("ff2.W"), P("ff2.b"));
    return ops::add(y, ff);
}

Tensor positional_encoding(const std::vector<double>& pos_norm, std::size_t d) {
    Tensor pe({pos_norm.size(), d});
    for (std::size_t r = 0; r < pos_norm.size(); ++r) {
        double p = pos_norm[r];
        for (std::size_t i = 0; 2 * i < d; ++i) {
            // angles sweep geometrically from p*1e4 down to ~p
            double a = p * std::pow(10000.0, 1.0 - 2.0 * static_cast<double>(i) /
                                                       static_cast<double>(d));
            pe[r * d + 2 * i] = std::sin(a);
            if (2 * i + 1 < d) pe[r * d + 2 * i + 1] = std::cos(a);
        }
    }
    return pe;
}

} // namespace nn

} // namespace dywave
