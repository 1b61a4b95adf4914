#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "saekit/buffer.hpp"
#include "saekit/optim.hpp"

namespace saekit {

struct TrainLogEntry {
    std::int64_t step = 0;  // number of updates applied after this entry's batch
    double lr = 0.0;
    double lambda_eff = 0.0;
    LossBreakdown loss;     // measured on the batch before the update
    double grad_norm = 0.0; // before clipping
};

nlohmann::json to_json(const TrainLogEntry& entry);

// Everything needed to continue a run bit-for-bit: parameters and optimizer
// state in full precision, plus the normalization factor and step count.
struct TrainCheckpoint {
    SaeParams params;
    AdamState adam;
    double norm_factor = 1.0;
    std::int64_t step = 0;
};

// Writes `path` as an SAEMDL01 model (f32, normalized-input coordinates) and
// `path.state` with the full-precision state.
void write_checkpoint(const std::filesystem::path& path, const TrainCheckpoint& ckpt, const TrainConfig& config);
TrainCheckpoint read_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
    std::optional<TrainCheckpoint> resume;
    // Called every eval_interval steps.
    std::function<void(const TrainCheckpoint&)> on_checkpoint;
    std::function<void(const TrainLogEntry&)> on_log;
};

struct TrainResult {
    SaeParams params;  // acts on inputs divided by norm_factor
    AdamState adam;
    double norm_factor = 1.0;
    std::int64_t steps_completed = 0;
    std::vector<TrainLogEntry> log;
    std::vector<std::string> warnings;
    bool truncated = false;
};

// Transpose-tied initialization: unit-norm random decoder columns, encoder
// rows equal to them, zero encoder bias, decoder bias at the data mean.
SaeParams init_params(const TrainConfig& config, const Eigen::Ref<const Matrix>& normalized_rows);

// Draws batches from an ActivationBuffer over `source`, normalizes them by the
// factor measured on the first buffer fill, and runs total_steps() updates of
// backward -> clip -> Adam with scheduled learning rate and sparsity weight.
TrainResult train(const TrainConfig& config, RowSource& source, const TrainOptions& options = {});

}  // namespace saekit
