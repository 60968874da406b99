#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dywave/checkpoint.hpp"
#include "dywave/modwt.hpp"
#include "dywave/pipeline.hpp"
#include "dywave/recon.hpp"
#include "dywave/signal_io.hpp"
#include "dywave/synth.hpp"
#include "dywave/token_report.hpp"
#include "dywave/train.hpp"

namespace fs = std::filesystem;
using namespace dywave;

namespace {

// exit codes: 0 ok, 2 I/O, 3 bad arguments/config, 4 checkpoint mismatch, 5 NaN abort
constexpr int kOk = 0, kIo = 2, kArgs = 3, kCkpt = 4, kNan = 5;

std::string slurp_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(path + ": read failed");
    return s;
}

void spew_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw IoError(path + ": write failed");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir + ": cannot create directory: " + ec.message());
}

void run_decompose(const std::string& input, const std::string& basis, std::size_t levels,
                   const std::string& output, bool invert) {
    if (levels < 1) throw std::invalid_argument("--levels must be at least 1");
    FilterPair fp = wavelet_filters(basis);
    Tensor X = read_signal(input);
    if (!invert) {
        WaveletStack stack = modwt(X, levels, fp);
        write_signal(output, stack_planes(stack));
        return;
    }
    // X is a coefficient stack: (levels+1)*C planes, details first, approx last
    std::size_t planes = X.shape()[0], L = X.shape()[1];
    if (planes % (levels + 1) != 0)
        throw IoError(input + ": " + std::to_string(planes) +
                      " planes cannot split into " + std::to_string(levels + 1) +
                      " coefficient groups");
    std::size_t C = planes / (levels + 1);
    WaveletStack stack;
    stack.levels = levels;
    stack.basis = basis;
    auto rows = [&](std::size_t first) {
        Tensor t({C, L});
        std::copy(X.data() + first * L, X.data() + (first + C) * L, t.data());
        return t;
    };
    for (std::size_t j = 0; j < levels; ++j) stack.details.push_back(rows(j * C));
    stack.approx = rows(levels * C);
    write_signal(output, imodwt(stack, fp));
}

void run_tokenize(const std::string& input, const std::string& ck_path, double tau,
                  const std::string& variant, bool emit_tokens, const std::string& output) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("--tau must lie strictly between 0 and 1");
    Checkpoint ck = load_checkpoint(ck_path);
    if (ck.cfg.model.variant == Variant::fixed_patch)
        throw CheckpointError(ck_path +
                              ": fixed_patch checkpoints carry no anchor tokenizer; "
                              "train a dynamic variant to produce token reports");
    if (!variant.empty()) ck.cfg.model.variant = variant_from_string(variant);
    ck.cfg.model.tau = tau;
    Model model = restore_model(ck);

    Tensor X = read_signal(input);
    if (X.shape()[0] != ck.cfg.model.C)
        throw CheckpointError(input + ": has " + std::to_string(X.shape()[0]) +
                              " channels but the checkpoint expects " +
                              std::to_string(ck.cfg.model.C));
    ParamLeaves leaves(model.params(), false);
    TokenizeResult tok = model.tokenize(X, leaves);
    spew_text(output, token_report_json(tok, X.shape()[1], X.shape()[0], tau, emit_tokens));
}

void run_train(const std::string& config_path, std::optional<std::uint64_t> data_seed,
               const std::string& out_dir) {
    TrainConfig cfg = train_config_from_json(slurp_text(config_path));
    if (data_seed) cfg.data.seed = *data_seed;
    cfg.validate();
    ensure_dir(out_dir);

    std::vector<Sample> tr = gen_synthetic(cfg.data);
    std::vector<Sample> te = make_test_set(cfg);
    Model model(cfg.model);
    TrainResult res = train(model, cfg, tr, te);

    fs::path dir(out_dir);
    save_checkpoint((dir / "checkpoint.dywc").string(), cfg, model.params());
    spew_text((dir / "metrics.json").string(), metrics_to_json(res.eval, &res.epochs));
    std::printf("%s: accuracy %.4f  macro_f1 %.4f  mean_tokens %.2f  wall %.1fs\n",
                to_string(cfg.model.variant), res.eval.accuracy, res.eval.macro_f1,
                res.eval.token_mean, res.wall_clock_sec);
}

void run_eval(const std::string& ck_path, std::optional<std::uint64_t> data_seed,
              std::optional<std::size_t> count, const std::string& output) {
    Checkpoint ck = load_checkpoint(ck_path);
    Model model = restore_model(ck);
    if (data_seed) ck.cfg.data.seed = *data_seed;
    if (count) ck.cfg.test_count = *count;
    std::vector<Sample> te = make_test_set(ck.cfg);
    EvalMetrics m = evaluate(model, te);
    spew_text(output, metrics_to_json(m, nullptr));
    std::printf("%s: accuracy %.4f  macro_f1 %.4f  mean_tokens %.2f\n",
                to_string(ck.cfg.model.variant), m.accuracy, m.macro_f1, m.token_mean);
}

void run_compare(const std::vector<std::string>& config_paths, const std::string& out_dir) {
    std::vector<TrainConfig> configs;
    for (const auto& p : config_paths)
        configs.push_back(train_config_from_json(slurp_text(p)));
    ensure_dir(out_dir);
    CompareResult res = compare(configs);
    fs::path dir(out_dir);
    spew_text((dir / "compare.json").string(), compare_to_json(res.rows));
    std::string table = compare_to_text(res.rows);
    spew_text((dir / "compare.txt").string(), table);
    std::fputs(table.c_str(), stdout);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dywave: wavelet-guided dynamic tokenization of multichannel signals"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dywave 0.1.0");

    auto* dec = app.add_subcommand("decompose", "Wavelet-decompose a signal file");
    std::string dec_in, dec_out, dec_basis;
    std::size_t dec_levels = 0;
    bool dec_invert = false;
    dec->add_option("--input", dec_in, "signal file (binary or CSV)")->required();
    dec->add_option("--basis", dec_basis, "wavelet basis")
        ->required()
        ->check(CLI::IsMember({"haar", "db4"}));
    dec->add_option("--levels", dec_levels, "decomposition depth J")->required();
    dec->add_option("--output", dec_out, "output stack file")->required();
    dec->add_flag("--invert", dec_invert)->group(""); // hidden: stack in, signal out

    auto* tok = app.add_subcommand("tokenize", "Emit a token report for one signal");
    std::string tok_in, tok_ck, tok_variant, tok_out;
    double tok_tau = 0.0;
    bool tok_emit = false;
    tok->add_option("--input", tok_in, "signal file")->required();
    tok->add_option("--checkpoint", tok_ck, "trained checkpoint")->required();
    tok->add_option("--tau", tok_tau, "token budget fraction in (0,1)")->required();
    tok->add_option("--variant", tok_variant, "override the tokenizing variant")
        ->check(CLI::IsMember({"full", "spec_bound", "no_fusion", "no_recon"}));
    tok->add_flag("--emit-tokens", tok_emit, "include token embeddings in the report");
    tok->add_option("--output", tok_out, "report JSON path")->required();

    auto* trn = app.add_subcommand("train", "Train one variant from a JSON config");
    std::string trn_cfg, trn_dir;
    std::uint64_t trn_seed = 0;
    trn->add_option("--config", trn_cfg, "TrainConfig JSON")->required();
    auto* trn_seed_opt = trn->add_option("--data-seed", trn_seed, "override the dataset seed");
    trn->add_option("--out-dir", trn_dir, "directory for checkpoint + metrics")->required();

    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on generated data");
    std::string evl_ck, evl_out;
    std::uint64_t evl_seed = 0;
    std::size_t evl_count = 0;
    evl->add_option("--checkpoint", evl_ck, "trained checkpoint")->required();
    auto* evl_seed_opt = evl->add_option("--data-seed", evl_seed, "override the dataset seed");
    auto* evl_count_opt = evl->add_option("--count", evl_count, "evaluation sample count");
    evl->add_option("--output", evl_out, "metrics JSON path")->required();

    auto* cmp = app.add_subcommand("compare", "Train and tabulate several variants");
    std::vector<std::string> cmp_cfgs;
    std::string cmp_dir;
    cmp->add_option("--configs", cmp_cfgs, "TrainConfig JSON files")
        ->required()
        ->expected(-2);
    cmp->add_option("--out-dir", cmp_dir, "directory for the comparison table")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kArgs; // help/version exit clean, bad usage is 3
    }

    try {
        if (*dec) run_decompose(dec_in, dec_basis, dec_levels, dec_out, dec_invert);
        else if (*tok) run_tokenize(tok_in, tok_ck, tok_tau, tok_variant, tok_emit, tok_out);
        else if (*trn)
            run_train(trn_cfg,
                      trn_seed_opt->count() ? std::optional<std::uint64_t>(trn_seed)
                                            : std::nullopt,
                      trn_dir);
        else if (*evl)
            run_eval(evl_ck,
                     evl_seed_opt->count() ? std::optional<std::uint64_t>(evl_seed)
                                           : std::nullopt,
                     evl_count_opt->count() ? std::optional<std::size_t>(evl_count)
                                            : std::nullopt,
                     evl_out);
        else if (*cmp) run_compare(cmp_cfgs, cmp_dir);
    } catch (const NanAbort& e) {
        std::cerr << "dywave: " << e.what() << "\n";
        return kNan;
    } catch (const CheckpointError& e) {
        std::cerr << "dywave: " << e.what() << "\n";
        return kCkpt;
    } catch (const IoError& e) {
        std::cerr << "dywave: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "dywave: " << e.what() << "\n";
        return kArgs;
    } catch (const std::exception& e) {
        std::cerr << "dywave: unexpected error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
