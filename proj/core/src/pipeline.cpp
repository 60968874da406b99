#include "dywave/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "dywave/embed.hpp"
#include "dywave/fusion.hpp"
#include "dywave/ops.hpp"
#include "dywave/recon.hpp"

namespace dywave {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::fixed_patch: return "fixed_patch";
        case Variant::spec_bound: return "spec_bound";
        case Variant::no_fusion: return "no_fusion";
        case Variant::no_recon: return "no_recon";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "fixed_patch") return Variant::fixed_patch;
    if (s == "spec_bound") return Variant::spec_bound;
    if (s == "no_fusion") return Variant::no_fusion;
    if (s == "no_recon") return Variant::no_recon;
    throw std::invalid_argument("variant: unknown value '" + s + "'");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (!(tau > 0.0 && tau < 1.0)) fail("tau: must lie strictly between 0 and 1");
    if (J < 1) fail("J: must be at least 1");
    if (K < 1 || K > J) fail("K: must lie in [1, J]");
    if (basis != "haar" && basis != "db4") fail("basis: must be haar or db4");
    if (d_U < 4) fail("d_U: must be at least 4");
    if (d_V < 1) fail("d_V: must be at least 1");
    if (d() / 4 < 1) fail("d_U+d_V: must be at least 4 for the key/query projections");
    if (L_ctx_max < 1) fail("L_ctx_max: must be positive");
    if (heads < 1) fail("heads: must be positive");
    if (d_V % heads != 0) fail("d_V: must be divisible by heads");
    if (d() % heads != 0) fail("d_U+d_V: must be divisible by heads");
    if (mlp_hidden < 1) fail("mlp_hidden: must be positive");
    if (n_classes < 2) fail("n_classes: must be at least 2");
    if (C < 1) fail("C: must be positive");
    if (lambda_rec < 0.0) fail("lambda_rec: must be non-negative");
    if (variant == Variant::fixed_patch) {
        if (patch < 1) fail("patch: must be positive");
        if (patch_stride < 1) fail("patch_stride: must be positive");
    }
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.dynamic()) filters_ = wavelet_filters(cfg_.basis);

    // Registration order is the checkpoint layout; append only.
    Rng dummy(0); // shapes only here; init_params re-fills
    std::size_t d = cfg_.d();
    if (cfg_.dynamic()) {
        std::size_t det_in = cfg_.K + 1;
        std::size_t ctx_in = cfg_.J + 1 - cfg_.K;
        params_.add("detail.c1.W", Tensor({cfg_.d_U, det_in, 5}));
        params_.add("detail.c1.b", Tensor({cfg_.d_U}));
        params_.add("detail.c2.W", Tensor({cfg_.d_U, cfg_.d_U, 5}));
        params_.add("detail.c2.b", Tensor({cfg_.d_U}));
        params_.add("ctx.proj.W", Tensor({cfg_.d_V, ctx_in}));
        params_.add("ctx.proj.b", Tensor({cfg_.d_V}));
        nn::register_attention_block(params_, "ctx.att", cfg_.d_V, 2 * cfg_.d_V, dummy);
        params_.add("sal.k.W", Tensor({d / 4, d}));
        params_.add("sal.q.W", Tensor({d / 4, d}));
    } else {
        params_.add("patch.proj.W", Tensor({d, cfg_.patch}));
        params_.add("patch.proj.b", Tensor({d}));
    }
    params_.add("fuse.W1", Tensor({cfg_.mlp_hidden, cfg_.C * d}));
    params_.add("fuse.b1", Tensor({cfg_.mlp_hidden}));
    params_.add("fuse.W2", Tensor({d, cfg_.mlp_hidden}));
    params_.add("fuse.b2", Tensor({d}));
    nn::register_attention_block(params_, "backbone.b0", d, 2 * d, dummy);
    nn::register_attention_block(params_, "backbone.b1", d, 2 * d, dummy);
    params_.add("head.W", Tensor({cfg_.n_classes, d}));
    params_.add("head.b", Tensor({cfg_.n_classes}));
    if (cfg_.dynamic()) {
        std::size_t planes = (cfg_.J + 1) * cfg_.C;
        params_.add("dec.proj.W", Tensor({planes, d}));
        params_.add("dec.proj.b", Tensor({planes}));
        params_.add("dec.convT.W", Tensor({planes, planes, 8}));
    }
}

void Model::init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, t] : params_.items()) {
        const auto& sh = t.shape();
        bool is_bias = sh.size() == 1;
        if (name.find(".ln") != std::string::npos) {
            // layer-norm gains stay at 1, shifts at 0
            double v = name.back() == 'g' ? 1.0 : 0.0;
            t = Tensor::full(sh, v);
        } else if (is_bias) {
            t = Tensor::zeros(sh);
        } else if (sh.size() == 2) {
            t = nn::glorot(rng, sh, sh[1], sh[0]);
        } else {
            // conv kernels: fan counts include the tap dimension
            t = nn::glorot(rng, sh, sh[1] * sh[2], sh[0] * sh[2]);
        }
    }
}

namespace {

// rows of one channel across a list of planes, as a [planes x L] constant
Tensor gather_channel(const std::vector<Tensor>& planes, std::size_t c) {
    std::size_t L = planes[0].dim(1);
    Tensor out({planes.size(), L});
    for (std::size_t p = 0; p < planes.size(); ++p)
        std::copy(planes[p].data() + c * L, planes[p].data() + (c + 1) * L,
                  out.data() + p * L);
    return out;
}

Tensor as_2d(const Tensor& X, std::size_t C) {
    if (X.rank() == 1) {
        if (C != 1)
            throw std::invalid_argument("signal: flat vector given but config expects " +
                                        std::to_string(C) + " channels");
        return Tensor({1, X.dim(0)}, std::vector<double>(X.data(), X.data() + X.numel()));
    }
    if (X.rank() != 2 || X.dim(0) != C)
        throw std::invalid_argument("signal: expected " + std::to_string(C) +
                                    " channels, got " + X.shape_str());
    return X;
}

} // namespace

TokenizeResult Model::tokenize_dynamic(const Tensor& Xin, const ParamLeaves& pl,
                                       WaveletStack* stack_out,
                                       std::vector<Var>* ef_out) const {
    Tensor X = as_2d(Xin, cfg_.C);
    std::size_t L = X.dim(1);
    WaveletStack stack = modwt(X, cfg_.J, filters_);
    StreamSplit split = partition_streams(X, stack, cfg_.K);

    std::vector<Var> EF;
    EF.reserve(cfg_.C);
    for (std::size_t c = 0; c < cfg_.C; ++c) {
        Var det_in = Var::constant(gather_channel(split.detail, c));
        Var ctx_in = Var::constant(gather_channel(split.context, c));
        Var EU = detail_encode(det_in, pl, "detail");
        Var EV = context_encode(ctx_in, pl, "ctx", cfg_.L_ctx_max, cfg_.heads);
        EF.push_back(fuse_embeddings(EU, EV));
    }

    Var P;
    if (cfg_.variant == Variant::spec_bound) {
        P = Var::constant(spectral_saliency(stack));
    } else {
        P = saliency(EF, pl.at("sal.k.W"), pl.at("sal.q.W"), ChannelMode::shared)[0];
    }

    TokenizeResult res;
    res.selection = select_anchors(P.value(), cfg_.tau);
    res.anchors = res.selection.anchors;
    res.saliency = P.value();
    res.cluster_of = assign_clusters(res.anchors, L);
    res.n_tokens = res.anchors.size();

    std::vector<Var> EA;
    EA.reserve(cfg_.C);
    for (std::size_t c = 0; c < cfg_.C; ++c) {
        if (cfg_.variant == Variant::no_fusion)
            EA.push_back(ops::gather_cols(EF[c], res.anchors));
        else
            EA.push_back(fuse_channel(EF[c], P, res.cluster_of, res.n_tokens));
    }
    res.tokens = project_tokens(EA, res.anchors, L, pl, "fuse", cfg_.positional);

    if (stack_out) *stack_out = std::move(stack);
    if (ef_out) *ef_out = std::move(EF);
    return res;
}

TokenizeResult Model::tokenize_patches(const Tensor& Xin, const ParamLeaves& pl) const {
    Tensor X = as_2d(Xin, cfg_.C);
    std::size_t L = X.dim(1);
    if (cfg_.patch > L)
        throw std::invalid_argument("patch: size " + std::to_string(cfg_.patch) +
                                    " exceeds sequence length " + std::to_string(L));
    std::size_t n = (L - cfg_.patch) / cfg_.patch_stride + 1;

    std::vector<Var> per_channel;
    per_channel.reserve(cfg_.C);
    for (std::size_t c = 0; c < cfg_.C; ++c) {
        Tensor patches({n, cfg_.patch});
        for (std::size_t i = 0; i < n; ++i)
            std::copy(X.data() + c * L + i * cfg_.patch_stride,
                      X.data() + c * L + i * cfg_.patch_stride + cfg_.patch,
                      patches.data() + i * cfg_.patch);
        per_channel.push_back(nn::linear_tokens(Var::constant(std::move(patches)),
                                                pl.at("patch.proj.W"),
                                                pl.at("patch.proj.b")));
    }
    Var merged = cfg_.C == 1 ? per_channel[0] : ops::concat_cols(per_channel);
    Var tok = nn::linear_tokens(ops::gelu(nn::linear_tokens(merged, pl.at("fuse.W1"),
                                                            pl.at("fuse.b1"))),
                                pl.at("fuse.W2"), pl.at("fuse.b2"));
    if (cfg_.positional) {
        std::vector<double> pos(n);
        for (std::size_t i = 0; i < n; ++i)
            pos[i] = static_cast<double>(i * cfg_.patch_stride + 1) / static_cast<double>(L);
        tok = ops::add(tok, Var::constant(nn::positional_encoding(pos, cfg_.d())));
    }
    TokenizeResult res;
    res.tokens = tok;
    res.n_tokens = n;
    return res;
}

TokenizeResult Model::tokenize(const Tensor& X, const ParamLeaves& pl) const {
    return cfg_.dynamic() ? tokenize_dynamic(X, pl, nullptr, nullptr)
                          : tokenize_patches(X, pl);
}

Var Model::backbone(const Var& tokens, const ParamLeaves& pl) const {
    Var x = nn::attention_block(tokens, pl, "backbone.b0", cfg_.heads);
    x = nn::attention_block(x, pl, "backbone.b1", cfg_.heads);
    return nn::linear_tokens(ops::mean_rows(x), pl.at("head.W"), pl.at("head.b"));
}

ForwardResult Model::forward(const Tensor& X, std::optional<std::size_t> label,
                             const ParamLeaves& pl, bool want_recon) const {
    ForwardResult fr;
    WaveletStack stack;
    if (cfg_.dynamic()) {
        fr.tok = tokenize_dynamic(X, pl, &stack, nullptr);
    } else {
        fr.tok = tokenize_patches(X, pl);
        want_recon = false;
    }
    fr.logits = backbone(fr.tok.tokens, pl);
    if (label) {
        fr.task_loss = ops::cross_entropy_logits(fr.logits, *label);
        fr.loss = fr.task_loss;
    }
    if (want_recon) {
        std::size_t planes = (cfg_.J + 1) * cfg_.C;
        Var W_hat = decode_tokens(fr.tok.tokens, pl, "dec", planes, stack.length());
        fr.recon_loss = recon_loss(W_hat, stack);
        double lam = cfg_.variant == Variant::no_recon ? 0.0 : cfg_.lambda_rec;
        if (label) fr.loss = total_loss(fr.task_loss, fr.recon_loss, lam);
    }
    return fr;
}

} // namespace dywave
