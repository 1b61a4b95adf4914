#include "saekit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "saekit/errors.hpp"

namespace saekit {

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(std::string("config field '") + field + "' " + what);
    };
    require(dict_size >= 1, "dict_size", "must be >= 1");
    require(input_dim >= 0, "input_dim", "must be >= 0");
    require(l0_target > 0.0, "l0_target", "must be > 0");
    require(lambda >= 0.0, "lambda", "must be >= 0");
    require(lr > 0.0, "lr", "must be > 0");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
    require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
    require(adam_eps > 0.0, "adam_eps", "must be > 0");
    require(epsilon_bandwidth > 0.0, "epsilon_bandwidth", "must be > 0");
    require(lr_warmup_steps >= 0, "lr_warmup_steps", "must be >= 0");
    require(sparsity_warmup_steps >= 0, "sparsity_warmup_steps", "must be >= 0");
    require(clip_max_norm > 0.0, "clip_max_norm", "must be > 0");
    require(total_tokens >= 0, "total_tokens", "must be >= 0");
    require(batch_tokens >= 1, "batch_tokens", "must be >= 1");
    require(eval_interval >= 1, "eval_interval", "must be >= 1");
    require(buffer_rows >= 2, "buffer_rows", "must be >= 2");
    require(theta_init > 0.0, "theta_init", "must be > 0");
    require(theta_floor > 0.0, "theta_floor", "must be > 0");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"dict_size", c.dict_size},
        {"input_dim", c.input_dim},
        {"l0_target", c.l0_target},
        {"lambda", c.lambda},
        {"lr", c.lr},
        {"adam_beta1", c.adam_beta1},
        {"adam_beta2", c.adam_beta2},
        {"adam_eps", c.adam_eps},
        {"epsilon_bandwidth", c.epsilon_bandwidth},
        {"lr_warmup_steps", c.lr_warmup_steps},
        {"sparsity_warmup_steps", c.sparsity_warmup_steps},
        {"clip_max_norm", c.clip_max_norm},
        {"total_tokens", c.total_tokens},
        {"batch_tokens", c.batch_tokens},
        {"seed", c.seed},
        {"eval_interval", c.eval_interval},
        {"buffer_rows", c.buffer_rows},
        {"theta_init", c.theta_init},
        {"theta_floor", c.theta_floor},
    };
}

namespace {

template <class T>
void assign(const nlohmann::json& value, const std::string& key, T& out) {
    bool ok = std::is_floating_point_v<T> ? value.is_number() : value.is_number_integer();
    if constexpr (std::is_unsigned_v<T>) ok = ok && (value.is_number_unsigned() || value.get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("config key '" + key + "' has the wrong type");
    out = value.get<T>();
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "dict_size") assign(value, key, base.dict_size);
        else if (key == "input_dim") assign(value, key, base.input_dim);
        else if (key == "l0_target") assign(value, key, base.l0_target);
        else if (key == "lambda") assign(value, key, base.lambda);
        else if (key == "lr") assign(value, key, base.lr);
        else if (key == "adam_beta1") assign(value, key, base.adam_beta1);
        else if (key == "adam_beta2") assign(value, key, base.adam_beta2);
        else if (key == "adam_eps") assign(value, key, base.adam_eps);
        else if (key == "epsilon_bandwidth") assign(value, key, base.epsilon_bandwidth);
        else if (key == "lr_warmup_steps") assign(value, key, base.lr_warmup_steps);
        else if (key == "sparsity_warmup_steps") assign(value, key, base.sparsity_warmup_steps);
        else if (key == "clip_max_norm") assign(value, key, base.clip_max_norm);
        else if (key == "total_tokens") assign(value, key, base.total_tokens);
        else if (key == "batch_tokens") assign(value, key, base.batch_tokens);
        else if (key == "seed") assign(value, key, base.seed);
        else if (key == "eval_interval") assign(value, key, base.eval_interval);
        else if (key == "buffer_rows") assign(value, key, base.buffer_rows);
        else if (key == "theta_init") assign(value, key, base.theta_init);
        else if (key == "theta_floor") assign(value, key, base.theta_floor);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return base;
}

AdamState AdamState::zeros_like(const SaeParams& params) {
    return {Gradients::zeros_like(params), Gradients::zeros_like(params), 0};
}

double lr_schedule(std::int64_t step, const TrainConfig& config) {
    if (step < 0) throw ConfigError("step must be >= 0");
    if (config.lr_warmup_steps == 0) return config.lr;
    const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(config.lr_warmup_steps));
    return config.lr * frac;
}

double sparsity_schedule(std::int64_t step, const TrainConfig& config) {
    if (step < 0) throw ConfigError("step must be >= 0");
    if (config.sparsity_warmup_steps == 0) return config.lambda;
    const double frac =
        std::min(1.0, static_cast<double>(step) / static_cast<double>(config.sparsity_warmup_steps));
    return config.lambda * frac;
}

double global_norm(const Gradients& g) { return std::sqrt(g.squared_norm()); }

Gradients clip_gradients(Gradients g, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip max_norm must be > 0");
    const double norm = global_norm(g);
    if (norm > max_norm) g *= max_norm / norm;
    return g;
}

void adam_update(SaeParams& params, const Gradients& g, AdamState& state, double lr_now,
                 const TrainConfig& config) {
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    state.step += 1;
    const auto t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(b1, t);
    const double bias2 = 1.0 - std::pow(b2, t);

    auto p_blocks = params.blocks();
    const auto g_blocks = g.blocks();
    auto m_blocks = state.first_moment.blocks();
    auto v_blocks = state.second_moment.blocks();
    for (std::size_t b = 0; b < p_blocks.size(); ++b) {
        auto p = p_blocks[b];
        auto gb = g_blocks[b];
        auto m = m_blocks[b];
        auto v = v_blocks[b];
        if (gb.size() != p.size()) throw ConfigError("gradient shape does not match parameters");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * gb[i];
            v[i] = b2 * v[i] + (1.0 - b2) * gb[i] * gb[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= lr_now * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
    params.theta = params.theta.cwiseMax(config.theta_floor);

    if (!params.w_enc.allFinite() || !params.b_enc.allFinite() || !params.w_dec.allFinite() ||
        !params.b_dec.allFinite() || !params.theta.allFinite()) {
        throw NumericError("Adam update produced non-finite parameters");
    }
}

std::pair<SaeParams, AdamState> adam_step(SaeParams params, const Gradients& g, AdamState state,
                                          double lr_now, const TrainConfig& config) {
    adam_update(params, g, state, lr_now, config);
    return {std::move(params), std::move(state)};
}

}  // namespace saekit
