#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dywave/pipeline.hpp"
#include "dywave/synth.hpp"
#include "dywave/tensor.hpp"

namespace dywave {

struct TrainConfig {
    ModelConfig model;
    SynthSpec data;              // training split; data.count is the train count
    std::size_t test_count = 400;
    std::size_t epochs = 50;
    std::size_t batch = 32;
    double lr_init = 1e-4;
    double lr_final = 1e-6;
    std::uint64_t seed = 1;      // parameter init and epoch shuffling

    void validate() const; // throws std::invalid_argument naming the field
};

// Canonical JSON round-trip. Parsing rejects unknown keys and wrong types
// with a field-level message; missing keys keep their defaults.
std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct EvalMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double token_mean = 0.0;
    double token_median = 0.0;
    std::size_t token_max = 0;
    std::vector<double> per_class_accuracy;
    std::vector<double> per_class_token_mean;
};

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double task_loss = 0.0;
    double recon_loss = 0.0;
    double lr = 0.0;
    double token_mean = 0.0;
};

struct NanAbort : std::runtime_error {
    std::size_t epoch, batch;
    NanAbort(std::size_t e, std::size_t b, const std::string& what)
        : std::runtime_error(what), epoch(e), batch(b) {}
};

struct TrainResult {
    EvalMetrics eval;
    std::vector<EpochLog> epochs;
    double wall_clock_sec = 0.0; // measurement noise; kept out of metrics JSON
};

// Initializes the model from cfg.seed and runs the configured schedule.
// Gradients are reduced in sample order, so the result is identical for any
// DYWAVE_THREADS setting.
TrainResult train(Model& model, const TrainConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& test_set);

EvalMetrics evaluate(const Model& model, const std::vector<Sample>& ds);

// Deterministic metrics serialization; epoch logs included when provided.
std::string metrics_to_json(const EvalMetrics& m, const std::vector<EpochLog>* epochs);

struct CompareRow {
    std::string variant;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double token_mean = 0.0;
    double wall_clock_sec = 0.0;
};

struct CompareResult {
    std::vector<CompareRow> rows;
    std::vector<std::shared_ptr<Model>> models; // aligned with rows
    std::vector<TrainResult> results;
};

// Trains and evaluates each config in order on its own generated dataset
// (identical data specs mean identical datasets).
CompareResult compare(const std::vector<TrainConfig>& configs);
std::string compare_to_json(const std::vector<CompareRow>& rows);
std::string compare_to_text(const std::vector<CompareRow>& rows);

// convenience: the held-out split derived from a train config
std::vector<Sample> make_test_set(const TrainConfig& cfg);

} // namespace dywave
