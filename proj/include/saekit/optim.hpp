#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "saekit/grad.hpp"
#include "saekit/sae_model.hpp"

namespace saekit {

struct TrainConfig {
    std::int64_t dict_size = 0;        // M
    std::int64_t input_dim = 0;        // n; 0 means "take it from the data source"
    double l0_target = 20.0;
    double lambda = 1.0;
    double lr = 7e-5;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double epsilon_bandwidth = 0.001;
    std::int64_t lr_warmup_steps = 1000;
    std::int64_t sparsity_warmup_steps = 5000;
    double clip_max_norm = 1.0;
    std::int64_t total_tokens = 49'000'000;
    std::int64_t batch_tokens = 2048;
    std::uint64_t seed = 0;
    std::int64_t eval_interval = 100;
    std::int64_t buffer_rows = 1 << 16;
    double theta_init = 0.001;
    double theta_floor = 1e-6;

    // Number of optimizer updates the token budget allows.
    std::int64_t total_steps() const { return total_tokens / batch_tokens; }

    // Throws ConfigError naming the first offending field.
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

// Overlays `j` onto `base`. Unknown keys and ill-typed values raise
// ConfigError naming the key.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct AdamState {
    Gradients first_moment;
    Gradients second_moment;
    std::int64_t step = 0;

    static AdamState zeros_like(const SaeParams& params);
};

// lr * min(1, step / lr_warmup_steps); step 0 gives 0.
double lr_schedule(std::int64_t step, const TrainConfig& config);

// lambda * min(1, step / sparsity_warmup_steps).
double sparsity_schedule(std::int64_t step, const TrainConfig& config);

double global_norm(const Gradients& g);

// Rescales all gradients together when their global L2 norm exceeds max_norm.
Gradients clip_gradients(Gradients g, double max_norm);

// Bias-corrected Adam, then theta clamped to config.theta_floor.
std::pair<SaeParams, AdamState> adam_step(SaeParams params, const Gradients& g, AdamState state,
                                          double lr_now, const TrainConfig& config);

// In-place form of adam_step used by the training loop.
void adam_update(SaeParams& params, const Gradients& g, AdamState& state, double lr_now,
                 const TrainConfig& config);

}  // namespace saekit
