#include "saekit/train.hpp"

#include <cmath>
#include <cstring>

#include "byte_io.hpp"
#include "saekit/data.hpp"
#include "saekit/errors.hpp"
#include "saekit/model_io.hpp"
#include "saekit/rng.hpp"

namespace saekit {

namespace fs = std::filesystem;

namespace {

constexpr char kStateMagic[9] = "SAESTA01";

fs::path state_path(const fs::path& model_path) {
    fs::path p = model_path;
    p += ".state";
    return p;
}

template <class Blocks>
void put_blocks(std::string& out, const Blocks& blocks) {
    for (auto block : blocks) {
        for (double v : block) detail::put_f64(out, v);
    }
}

template <class Blocks>
const unsigned char* get_blocks(const unsigned char* p, Blocks blocks) {
    for (auto block : blocks) {
        for (double& v : block) {
            v = detail::get_f64(p);
            p += 8;
        }
    }
    return p;
}

}  // namespace

nlohmann::json to_json(const TrainLogEntry& e) {
    return {{"step", e.step},
            {"lr", e.lr},
            {"lambda_eff", e.lambda_eff},
            {"reconstruction", e.loss.reconstruction},
            {"sparsity", e.loss.sparsity},
            {"total", e.loss.total},
            {"mean_l0", e.loss.mean_l0},
            {"grad_norm", e.grad_norm}};
}

void write_checkpoint(const fs::path& path, const TrainCheckpoint& ckpt, const TrainConfig& config) {
    nlohmann::json meta = {{"kind", "checkpoint"},
                           {"config", to_json(config)},
                           {"normalization_factor", ckpt.norm_factor},
                           {"step", ckpt.step},
                           {"coordinates", "normalized"}};
    write_model(path, ckpt.params, meta);

    std::string bytes(kStateMagic, 8);
    detail::put_u32(bytes, static_cast<std::uint32_t>(ckpt.params.input_dim()));
    detail::put_u32(bytes, static_cast<std::uint32_t>(ckpt.params.dict_size()));
    detail::put_u64(bytes, static_cast<std::uint64_t>(ckpt.step));
    detail::put_u64(bytes, static_cast<std::uint64_t>(ckpt.adam.step));
    detail::put_f64(bytes, ckpt.norm_factor);
    put_blocks(bytes, ckpt.params.blocks());
    put_blocks(bytes, ckpt.adam.first_moment.blocks());
    put_blocks(bytes, ckpt.adam.second_moment.blocks());
    detail::write_file(state_path(path).string(), bytes);
}

TrainCheckpoint read_checkpoint(const fs::path& path) {
    const ModelFile model = read_model(path);
    const std::string bytes = detail::read_file(state_path(path).string());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 40 || std::memcmp(p, kStateMagic, 8) != 0) {
        throw FormatError("state", "missing or bad SAESTA01 header");
    }
    const std::uint32_t n = detail::get_u32(p + 8);
    const std::uint32_t m = detail::get_u32(p + 12);
    if (n != model.params.input_dim() || m != model.params.dict_size()) {
        throw FormatError("state", "dimensions disagree with the model file");
    }
    const std::uint64_t per_set = 2ull * n * m + m + n + m;
    if (bytes.size() != 40 + 3 * 8 * per_set) throw FormatError("state", "unexpected length");

    TrainCheckpoint ckpt;
    ckpt.step = static_cast<std::int64_t>(detail::get_u64(p + 16));
    ckpt.params = SaeParams::zeros(n, m);
    ckpt.adam = AdamState::zeros_like(ckpt.params);
    ckpt.adam.step = static_cast<std::int64_t>(detail::get_u64(p + 24));
    ckpt.norm_factor = detail::get_f64(p + 32);
    p += 40;
    p = get_blocks(p, ckpt.params.blocks());
    p = get_blocks(p, ckpt.adam.first_moment.blocks());
    get_blocks(p, ckpt.adam.second_moment.blocks());
    ckpt.params.validate();
    return ckpt;
}

SaeParams init_params(const TrainConfig& config, const Eigen::Ref<const Matrix>& normalized_rows) {
    const Index n = normalized_rows.cols();
    const Index m = config.dict_size;
    if (normalized_rows.rows() < 1) throw ConfigError("initialization needs at least one row");
    Rng rng = make_rng(config.seed, "train/init");
    SaeParams p = SaeParams::zeros(n, m);
    for (Index j = 0; j < m; ++j) {
        double norm = 0.0;
        do {
            for (Index i = 0; i < n; ++i) p.w_dec(i, j) = standard_normal(rng);
            norm = p.w_dec.col(j).norm();
        } while (norm < 1e-12);
        p.w_dec.col(j) /= norm;
    }
    p.w_enc = p.w_dec.transpose();
    p.b_dec = normalized_rows.colwise().mean().transpose();
    p.theta.setConstant(config.theta_init);
    return p;
}

TrainResult train(const TrainConfig& config, RowSource& source, const TrainOptions& options) {
    config.validate();
    if (config.input_dim != 0 && config.input_dim != source.dim()) {
        throw ConfigError("config input_dim " + std::to_string(config.input_dim) + " does not match source width " +
                          std::to_string(source.dim()));
    }

    ActivationBuffer buffer(source, config.buffer_rows, config.seed);
    const auto first_fill = buffer.prime();
    if (first_fill.rows() == 0) throw ConfigError("activation source is empty");

    TrainResult result;
    std::int64_t start = 0;
    if (options.resume) {
        const TrainCheckpoint& ckpt = *options.resume;
        if (ckpt.params.input_dim() != source.dim() || ckpt.params.dict_size() != config.dict_size) {
            throw ConfigError("checkpoint shape does not match config and source");
        }
        result.params = ckpt.params;
        result.adam = ckpt.adam;
        result.norm_factor = ckpt.norm_factor;
        start = ckpt.step;
        // Replay the batch stream up to the checkpoint.
        for (std::int64_t s = 0; s < start; ++s) {
            if (!buffer.next_batch(config.batch_tokens)) {
                throw ConfigError("source ended before the checkpoint step was reached");
            }
        }
    } else {
        result.norm_factor = normalization_factor(first_fill);
        const Matrix normalized = first_fill / result.norm_factor;
        result.params = init_params(config, normalized);
        result.adam = AdamState::zeros_like(result.params);
    }

    const std::int64_t total = config.total_steps();
    const double inv_norm = 1.0 / result.norm_factor;
    std::int64_t step = start;
    for (; step < total; ++step) {
        std::optional<ActivationBatch> batch = buffer.next_batch(config.batch_tokens);
        if (!batch) {
            result.truncated = true;
            result.warnings.push_back("activation source exhausted after " + std::to_string(step) + " of " +
                                      std::to_string(total) + " steps");
            break;
        }
        batch->rows *= inv_norm;

        const std::int64_t k = step + 1;
        const double lr_now = lr_schedule(k, config);
        const double lambda_eff = sparsity_schedule(k, config);
        LossAndGradients lg = loss_and_backward(result.params, batch->rows, lambda_eff, config.l0_target,
                                                config.epsilon_bandwidth);
        const double norm = global_norm(lg.grads);
        if (norm > config.clip_max_norm) lg.grads *= config.clip_max_norm / norm;
        adam_update(result.params, lg.grads, result.adam, lr_now, config);

        if (k % config.eval_interval == 0 || k == total) {
            TrainLogEntry entry{k, lr_now, lambda_eff, lg.loss, norm};
            result.log.push_back(entry);
            if (options.on_log) options.on_log(entry);
        }
        if (k % config.eval_interval == 0 && options.on_checkpoint) {
            options.on_checkpoint(TrainCheckpoint{result.params, result.adam, result.norm_factor, k});
        }
    }
    result.steps_completed = step;
    return result;
}

}  // namespace saekit
