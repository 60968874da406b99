#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dywave/autodiff.hpp"
#include "dywave/ops.hpp"
#include "dywave/rng.hpp"
#include "dywave/tensor.hpp"

namespace dywave {

// Ordered named parameter set. Registration order is the serialization order,
// so it must stay stable across runs for a given config.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t);
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::size_t size() const { return items_.size(); }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// One graph-leaf Var per parameter; gradients accumulate across every sample
// whose graph was built from the same leaves.
class ParamLeaves {
public:
    explicit ParamLeaves(const ParamStore& store, bool requires_grad = true);
    const Var& at(const std::string& name) const;
    const std::vector<std::pair<std::string, Var>>& items() const { return items_; }

private:
    std::vector<std::pair<std::string, Var>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace nn {

// fan-balanced uniform init
Tensor glorot(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in,
              std::size_t fan_out);

// X[T x in] * W[out x in]^T + b  (token-major)
Var linear_tokens(const Var& X, const Var& W, const Var& b);
// W[out x in] * X[in x L] + b (feature-major)
Var linear_feat(const Var& X, const Var& W, const Var& b);

// two-layer feature-major MLP with a smooth rectifier in the middle
Var mlp_feat(const Var& X, const Var& W1, const Var& b1, const Var& W2, const Var& b2);

// Registers the parameters of one pre-norm encoder block under `prefix.`
// (q/k/v/out projections, two layer norms, two feed-forward layers).
void register_attention_block(ParamStore& ps, const std::string& prefix, std::size_t d,
                              std::size_t d_ff, Rng& rng);

// One pre-norm block: X + MHA(LN(X)), then + FF(LN(.)).  X is [T x d].
Var attention_block(const Var& X, const ParamLeaves& pl, const std::string& prefix,
                    std::size_t heads);

// Sinusoidal code for normalized positions in (0, 1]; one row per position.
Tensor positional_encoding(const std::vector<double>& pos_norm, std::size_t d);

} // namespace nn

} // namespace dywave
