#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dywave/anchors.hpp"
#include "dywave/autodiff.hpp"
#include "dywave/modwt.hpp"
#include "dywave/nn.hpp"
#include "dywave/tensor.hpp"

namespace dywave {

enum class Variant { full, fixed_patch, spec_bound, no_fusion, no_recon };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
    Variant variant = Variant::full;
    double tau = 0.125;
    std::size_t J = 4;
    std::size_t K = 1;
    std::string basis = "db4";
    std::size_t d_U = 32;
    std::size_t d_V = 32;
    std::size_t L_ctx_max = 128;
    std::size_t heads = 4;
    std::size_t mlp_hidden = 128;
    std::size_t n_classes = 4;
    std::size_t C = 1;
    double lambda_rec = 0.1;
    std::size_t patch = 8;
    std::size_t patch_stride = 8;
    bool positional = true;

    std::size_t d() const { return d_U + d_V; }
    bool dynamic() const { return variant != Variant::fixed_patch; }
    // throws std::invalid_argument naming the offending field
    void validate() const;
};

struct TokenizeResult {
    Var tokens;                          // [n_tokens x d]
    std::size_t n_tokens = 0;
    // dynamic variants only:
    std::vector<std::size_t> anchors;    // 0-based timesteps
    Tensor saliency;                     // length L
    std::vector<std::size_t> cluster_of; // length L, cluster index per timestep
    AnchorSelection selection;
};

struct ForwardResult {
    Var logits;     // [1 x n_classes]
    Var task_loss;  // defined when a label was supplied
    Var recon_loss; // defined for decoder-bearing variants when requested
    Var loss;       // task + lambda * rec (or just task)
    TokenizeResult tok;
};

// Owns the parameters for one configured variant and builds per-sample
// graphs over them.
class Model {
public:
    explicit Model(ModelConfig cfg);

    void init_params(std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Token path only; never touches the decoder.
    TokenizeResult tokenize(const Tensor& X, const ParamLeaves& pl) const;

    // Token path + backbone; with a label also the losses, and with
    // want_recon the decoder branch (reported but excluded from `loss`
    // when the variant pins lambda to zero).
    ForwardResult forward(const Tensor& X, std::optional<std::size_t> label,
                          const ParamLeaves& pl, bool want_recon) const;

    // classifier over a token sequence [T x d]
    Var backbone(const Var& tokens, const ParamLeaves& pl) const;

private:
    ModelConfig cfg_;
    FilterPair filters_; // unused by fixed_patch
    ParamStore params_;

    TokenizeResult tokenize_dynamic(const Tensor& X, const ParamLeaves& pl,
                                    WaveletStack* stack_out,
                                    std::vector<Var>* ef_out) const;
    TokenizeResult tokenize_patches(const Tensor& X, const ParamLeaves& pl) const;
};

} // namespace dywave
