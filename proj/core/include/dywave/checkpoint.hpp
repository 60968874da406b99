#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dywave/pipeline.hpp"
#include "dywave/train.hpp"

namespace dywave {

// parameters disagree with the embedded config, or the config itself is unusable
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    TrainConfig cfg;
    std::vector<std::pair<std::string, Tensor>> params;
};

// Layout: "DYWC", u32 version=1, u64 config_len + canonical config JSON, u32
// param count, then per parameter: u32 name_len, name, u32 ndim, u64 dims[],
// little-endian 64-bit float data.
void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     const ParamStore& params);

// Throws IoError on file-level corruption, CheckpointError on semantic problems.
Checkpoint load_checkpoint(const std::string& path);

// Builds a Model from the embedded config and installs the saved parameters,
// verifying every name and shape.
Model restore_model(const Checkpoint& ck);

} // namespace dywave
