#include "dywave/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "dywave/optim.hpp"
#include "dywave/threading.hpp"

namespace dywave {

using nlohmann::json;

void TrainConfig::validate() const {
    model.validate();
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (model.C != data.C) fail("C: model and data channel counts diverged");
    if (model.n_classes != data.n_classes) fail("n_classes: model and data diverged");
    if (data.L < 8) fail("L: must be at least 8");
    if (data.count < 1) fail("train_count: must be positive");
    if (test_count < 1) fail("test_count: must be positive");
    if (data.noise_std < 0.0) fail("noise_std: must be non-negative");
    if (!(data.gap_frac >= 0.0 && data.gap_frac < 1.0)) fail("gap_frac: must lie in [0,1)");
    if (data.burst_scale < 0.0) fail("burst_scale: must be non-negative");
    if (epochs < 1) fail("epochs: must be positive");
    if (batch < 1) fail("batch: must be positive");
    if (!(lr_init > 0.0)) fail("lr_init: must be positive");
    if (!(lr_final > 0.0)) fail("lr_final: must be positive");
    if (lr_final > lr_init) fail("lr_final: must not exceed lr_init");
    if (model.variant == Variant::fixed_patch && model.patch > data.L)
        fail("patch: exceeds sequence length L");
}

std::string to_json(const TrainConfig& cfg) {
    json j;
    j["variant"] = to_string(cfg.model.variant);
    j["tau"] = cfg.model.tau;
    j["J"] = cfg.model.J;
    j["K"] = cfg.model.K;
    j["basis"] = cfg.model.basis;
    j["d_U"] = cfg.model.d_U;
    j["d_V"] = cfg.model.d_V;
    j["L_ctx_max"] = cfg.model.L_ctx_max;
    j["heads"] = cfg.model.heads;
    j["mlp_hidden"] = cfg.model.mlp_hidden;
    j["n_classes"] = cfg.model.n_classes;
    j["C"] = cfg.model.C;
    j["lambda_rec"] = cfg.model.lambda_rec;
    j["patch"] = cfg.model.patch;
    j["patch_stride"] = cfg.model.patch_stride;
    j["positional"] = cfg.model.positional;
    j["L"] = cfg.data.L;
    j["train_count"] = cfg.data.count;
    j["test_count"] = cfg.test_count;
    j["noise_std"] = cfg.data.noise_std;
    j["gap_frac"] = cfg.data.gap_frac;
    j["burst_scale"] = cfg.data.burst_scale;
    j["data_seed"] = cfg.data.seed;
    j["epochs"] = cfg.epochs;
    j["batch"] = cfg.batch;
    j["lr_init"] = cfg.lr_init;
    j["lr_final"] = cfg.lr_final;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    TrainConfig cfg;
    auto num = [&](const char* key, double& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number())
            throw std::invalid_argument(std::string("config: field '") + key +
                                        "' must be a number");
        dst = j[key].get<double>();
    };
    auto uns = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer() && !j[key].is_number_unsigned())
            throw std::invalid_argument(std::string("config: field '") + key +
                                        "' must be a non-negative integer");
        auto v = j[key].get<long long>();
        if (v < 0)
            throw std::invalid_argument(std::string("config: field '") + key +
                                        "' must be a non-negative integer");
        dst = static_cast<std::decay_t<decltype(dst)>>(v);
    };
    auto str = [&](const char* key, std::string& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_string())
            throw std::invalid_argument(std::string("config: field '") + key +
                                        "' must be a string");
        dst = j[key].get<std::string>();
    };
    auto boolean = [&](const char* key, bool& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_boolean())
            throw std::invalid_argument(std::string("config: field '") + key +
                                        "' must be a boolean");
        dst = j[key].get<bool>();
    };

    static const char* known[] = {
        "variant", "tau", "J", "K", "basis", "d_U", "d_V", "L_ctx_max", "heads",
        "mlp_hidden", "n_classes", "C", "lambda_rec", "patch", "patch_stride",
        "positional", "L", "train_count", "test_count", "noise_std", "gap_frac",
        "burst_scale", "data_seed", "epochs", "batch", "lr_init", "lr_final", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw std::invalid_argument("config: unknown field '" + it.key() + "'");
    }

    std::string variant = to_string(cfg.model.variant);
    str("variant", variant);
    try {
        cfg.model.variant = variant_from_string(variant);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("config: field 'variant' must be one of full, "
                                    "fixed_patch, spec_bound, no_fusion, no_recon");
    }
    num("tau", cfg.model.tau);
    uns("J", cfg.model.J);
    uns("K", cfg.model.K);
    str("basis", cfg.model.basis);
    uns("d_U", cfg.model.d_U);
    uns("d_V", cfg.model.d_V);
    uns("L_ctx_max", cfg.model.L_ctx_max);
    uns("heads", cfg.model.heads);
    uns("mlp_hidden", cfg.model.mlp_hidden);
    uns("n_classes", cfg.model.n_classes);
    uns("C", cfg.model.C);
    num("lambda_rec", cfg.model.lambda_rec);
    uns("patch", cfg.model.patch);
    uns("patch_stride", cfg.model.patch_stride);
    boolean("positional", cfg.model.positional);
    uns("L", cfg.data.L);
    uns("train_count", cfg.data.count);
    uns("test_count", cfg.test_count);
    num("noise_std", cfg.data.noise_std);
    num("gap_frac", cfg.data.gap_frac);
    num("burst_scale", cfg.data.burst_scale);
    uns("data_seed", cfg.data.seed);
    uns("epochs", cfg.epochs);
    uns("batch", cfg.batch);
    num("lr_init", cfg.lr_init);
    num("lr_final", cfg.lr_final);
    uns("seed", cfg.seed);

    cfg.data.n_classes = cfg.model.n_classes;
    cfg.data.C = cfg.model.C;
    cfg.validate();
    return cfg;
}

std::vector<Sample> make_test_set(const TrainConfig& cfg) {
    SynthSpec spec = cfg.data;
    spec.count = cfg.test_count;
    spec.seed = Rng::mix(cfg.data.seed, 0x7e57);
    return gen_synthetic(spec);
}

namespace {

struct SampleOut {
    std::vector<Tensor> grads; // aligned with params.items(); empty = zero
    double loss = 0, task = 0, rec = 0;
    std::size_t tokens = 0;
};

SampleOut run_sample(const Model& model, const Sample& s) {
    SampleOut out;
    ParamLeaves leaves(model.params(), true);
    ForwardResult fr = model.forward(s.X, s.label, leaves, model.config().dynamic());
    out.loss = fr.loss.value()[0];
    out.task = fr.task_loss.value()[0];
    out.rec = fr.recon_loss.defined() ? fr.recon_loss.value()[0] : 0.0;
    out.tokens = fr.tok.n_tokens;
    backward(fr.loss);
    out.grads.resize(leaves.items().size());
    for (std::size_t i = 0; i < leaves.items().size(); ++i)
        if (leaves.items()[i].second.has_grad())
            out.grads[i] = std::move(leaves.items()[i].second.node()->grad);
    return out;
}

} // namespace

TrainResult train(Model& model, const TrainConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& test_set) {
    auto t0 = std::chrono::steady_clock::now();
    model.init_params(cfg.seed);
    Adam opt(model.params(), {cfg.lr_init, 0.9, 0.999, 1e-8});

    TrainResult res;
    std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::size_t n_params = model.params().items().size();
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        opt.set_lr(cosine_lr(e, cfg.epochs, cfg.lr_init, cfg.lr_final));
        Rng shuffle_rng(Rng::mix(cfg.seed, 0xE000 + e));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        EpochLog log;
        log.epoch = e;
        log.lr = opt.lr();
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch, ++batch_index) {
            std::size_t count = std::min(cfg.batch, n - start);
            std::vector<SampleOut> outs(count);
            parallel_for(count, [&](std::size_t s) {
                outs[s] = run_sample(model, train_set[order[start + s]]);
            });
            // reduce in sample order so thread count cannot change the sums
            std::vector<Tensor> grads;
            grads.reserve(n_params);
            for (std::size_t i = 0; i < n_params; ++i)
                grads.emplace_back(Tensor::zeros(model.params().items()[i].second.shape()));
            double inv = 1.0 / static_cast<double>(count);
            for (std::size_t s = 0; s < count; ++s) {
                if (!std::isfinite(outs[s].loss))
                    throw NanAbort(e, batch_index,
                                   "train: non-finite loss at epoch " + std::to_string(e) +
                                       ", batch " + std::to_string(batch_index));
                for (std::size_t i = 0; i < n_params; ++i)
                    if (outs[s].grads[i].numel())
                        for (std::size_t k = 0; k < grads[i].numel(); ++k)
                            grads[i][k] += outs[s].grads[i][k];
                log.loss += outs[s].loss;
                log.task_loss += outs[s].task;
                log.recon_loss += outs[s].rec;
                log.token_mean += static_cast<double>(outs[s].tokens);
            }
            for (auto& g : grads)
                for (std::size_t k = 0; k < g.numel(); ++k) g[k] *= inv;
            try {
                opt.step(model.params(), grads);
            } catch (const std::runtime_error& err) {
                throw NanAbort(e, batch_index, err.what());
            }
        }
        double inv_n = 1.0 / static_cast<double>(n);
        log.loss *= inv_n;
        log.task_loss *= inv_n;
        log.recon_loss *= inv_n;
        log.token_mean *= inv_n;
        res.epochs.push_back(log);
    }

    res.eval = evaluate(model, test_set);
    res.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

EvalMetrics evaluate(const Model& model, const std::vector<Sample>& ds) {
    std::size_t n = ds.size();
    std::size_t nc = model.config().n_classes;
    ParamLeaves leaves(model.params(), false); // read-only; safe to share
    std::vector<std::size_t> pred(n), tokens(n);
    parallel_for(n, [&](std::size_t i) {
        ForwardResult fr = model.forward(ds[i].X, std::nullopt, leaves, false);
        const Tensor& lg = fr.logits.value();
        std::size_t best = 0;
        for (std::size_t c = 1; c < nc; ++c)
            if (lg[c] > lg[best]) best = c;
        pred[i] = best;
        tokens[i] = fr.tok.n_tokens;
    });

    EvalMetrics m;
    std::vector<std::vector<std::size_t>> conf(nc, std::vector<std::size_t>(nc, 0));
    std::vector<double> class_tokens(nc, 0.0);
    std::vector<std::size_t> class_count(nc, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        conf[ds[i].label][pred[i]]++;
        class_tokens[ds[i].label] += static_cast<double>(tokens[i]);
        class_count[ds[i].label]++;
        if (pred[i] == ds[i].label) ++correct;
        m.token_mean += static_cast<double>(tokens[i]);
        m.token_max = std::max(m.token_max, tokens[i]);
    }
    m.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    m.token_mean = n ? m.token_mean / static_cast<double>(n) : 0.0;
    std::vector<std::size_t> sorted = tokens;
    std::sort(sorted.begin(), sorted.end());
    if (n)
        m.token_median = n % 2 ? static_cast<double>(sorted[n / 2])
                               : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        std::size_t tp = conf[c][c], fn = 0, fp = 0;
        for (std::size_t o = 0; o < nc; ++o)
            if (o != c) {
                fn += conf[c][o];
                fp += conf[o][c];
            }
        double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        m.per_class_accuracy.push_back(
            class_count[c] ? static_cast<double>(tp) / static_cast<double>(class_count[c])
                           : 0.0);
        m.per_class_token_mean.push_back(
            class_count[c] ? class_tokens[c] / static_cast<double>(class_count[c]) : 0.0);
    }
    m.macro_f1 = f1_sum / static_cast<double>(nc);
    return m;
}

std::string metrics_to_json(const EvalMetrics& m, const std::vector<EpochLog>* epochs) {
    json j;
    j["accuracy"] = m.accuracy;
    j["macro_f1"] = m.macro_f1;
    j["tokens"] = {{"mean", m.token_mean}, {"median", m.token_median}, {"max", m.token_max}};
    json pc = json::array();
    for (std::size_t c = 0; c < m.per_class_accuracy.size(); ++c)
        pc.push_back({{"class", c},
                      {"accuracy", m.per_class_accuracy[c]},
                      {"token_mean", m.per_class_token_mean[c]}});
    j["per_class"] = pc;
    if (epochs) {
        json ep = json::array();
        for (const auto& e : *epochs)
            ep.push_back({{"epoch", e.epoch},
                          {"loss", e.loss},
                          {"task_loss", e.task_loss},
                          {"recon_loss", e.recon_loss},
                          {"lr", e.lr},
                          {"token_mean", e.token_mean}});
        j["epochs"] = ep;
    }
    return j.dump(2);
}

CompareResult compare(const std::vector<TrainConfig>& configs) {
    if (configs.size() < 2)
        throw std::invalid_argument("compare: needs at least two configurations");
    CompareResult out;
    for (const auto& cfg : configs) {
        cfg.validate();
        auto model = std::make_shared<Model>(cfg.model);
        std::vector<Sample> tr = gen_synthetic(cfg.data);
        std::vector<Sample> te = make_test_set(cfg);
        TrainResult r = train(*model, cfg, tr, te);
        CompareRow row;
        row.variant = to_string(cfg.model.variant);
        row.accuracy = r.eval.accuracy;
        row.macro_f1 = r.eval.macro_f1;
        row.token_mean = r.eval.token_mean;
        row.wall_clock_sec = r.wall_clock_sec;
        out.rows.push_back(row);
        out.models.push_back(std::move(model));
        out.results.push_back(std::move(r));
    }
    return out;
}

std::string compare_to_json(const std::vector<CompareRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"variant", r.variant},
                       {"accuracy", r.accuracy},
                       {"macro_f1", r.macro_f1},
                       {"token_mean", r.token_mean},
                       {"wall_clock_sec", r.wall_clock_sec}});
    return json{{"rows", arr}}.dump(2);
}

std::string compare_to_text(const std::vector<CompareRow>& rows) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-12s %9s %9s %12s %12s\n", "variant", "acc", "f1",
                  "mean_tokens", "wall_sec");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-12s %9.4f %9.4f %12.2f %12.1f\n",
                      r.variant.c_str(), r.accuracy, r.macro_f1, r.token_mean,
                      r.wall_clock_sec);
        out += buf;
    }
    return out;
}

} // namespace dywave
