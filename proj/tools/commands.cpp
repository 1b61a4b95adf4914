#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include "cli.hpp"
#include "params.hpp"
#include "saekit/buffer.hpp"
#include "saekit/darkmatter.hpp"
#include "saekit/data.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalmetrics.hpp"
#include "saekit/featmatch.hpp"
#include "saekit/model_io.hpp"
#include "saekit/train.hpp"
#include "saekit/version.hpp"

namespace saekit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// Inputs and outputs of one command, written as manifest.json.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    void input(const fs::path& p) { inputs_.push_back(p.string()); }
    void artifact(const fs::path& p) { artifacts_.push_back(p.string()); }
    void warn(const std::string& w) { warnings_.push_back(w); }

    void write(const fs::path& out_dir, const Resolved& r, std::uint64_t seed) {
        const fs::path path = out_dir / "manifest.json";
        for (const std::string& a : artifacts_) {
            if (!fs::exists(a)) throw IoError("artifact missing after run: " + a);
        }
        json j = {{"command", command_},
                  {"tool_version", kVersion},
                  {"seed", seed},
                  {"params", r.params},
                  {"train_config", r.train ? to_json(*r.train) : json(nullptr)},
                  {"inputs", inputs_},
                  {"artifacts", artifacts_},
                  {"warnings", warnings_}};
        std::ofstream f(path);
        f << j.dump(2) << '\n';
        if (!f) throw IoError("cannot write " + path.string());
    }

private:
    std::string command_;
    std::vector<std::string> inputs_;
    std::vector<std::string> artifacts_;
    std::vector<std::string> warnings_;
};

std::string str(const json& p, const char* key) { return p.at(key).get<std::string>(); }
std::uint64_t u64(const json& p, const char* key) { return p.at(key).get<std::uint64_t>(); }
double f64(const json& p, const char* key) { return p.at(key).get<double>(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

fs::path require_out(const json& p) {
    const std::string out = str(p, "out");
    if (out.empty()) throw ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw IoError("cannot write " + path.string());
}

// Model parameters acting on raw activations. Checkpoints store
// normalized-input coordinates and are converted here.
SaeParams load_raw_params(const fs::path& path) {
    ModelFile m = read_model(path);
    if (m.metadata.value("coordinates", "raw") == "normalized") {
        return rescale_for_raw_inputs(m.params, m.metadata.at("normalization_factor").get<double>());
    }
    return m.params;
}

SyntheticGroundTruth load_ground_truth(const fs::path& path) {
    const ModelFile m = read_model(path);
    if (m.metadata.value("kind", "") != "ground_truth") {
        throw ConfigError(path.string() + " is not a ground-truth file written by gen-synthetic");
    }
    SyntheticGroundTruth gt;
    gt.dictionary = m.params.w_dec;
    gt.x0 = m.params.b_dec;
    gt.k_active = m.metadata.at("k_active").get<double>();
    gt.coeff_min = m.metadata.at("coeff_min").get<double>();
    gt.coeff_max = m.metadata.at("coeff_max").get<double>();
    gt.seed = m.metadata.at("seed").get<std::uint64_t>();
    return gt;
}

Matrix read_all(RowSource& src, Index expected_rows, Index max_rows) {
    Index cap = max_rows > 0 ? std::min(expected_rows, max_rows) : expected_rows;
    Matrix rows(cap, src.dim());
    std::vector<std::uint64_t> ids;
    Index got = 0;
    while (got < cap) {
        const Index k = src.read(rows, got, cap - got, ids);
        if (k == 0) break;
        got += k;
    }
    rows.conservativeResize(got, Eigen::NoChange);
    return rows;
}

// Evaluation rows: the shard directory if given, otherwise a held-out sample
// from the ground truth.
Matrix evaluation_rows(const json& p, const std::optional<SyntheticGroundTruth>& gt, std::uint64_t seed,
                       const char* samples_key, Manifest& manifest) {
    const std::string shards = str(p, "shards");
    if (!shards.empty()) {
        ShardDirectorySource src(shards);
        manifest.input(shards);
        return read_all(src, static_cast<Index>(src.total_rows()), static_cast<Index>(u64(p, "max_rows")));
    }
    if (gt) {
        const auto count = static_cast<Index>(u64(p, samples_key));
        if (count < 2) throw ConfigError(std::string("--") + kebab(samples_key) + " must be >= 2");
        return synth_generate(*gt, count, derive_seed(seed, "cli/eval-data")).batch.rows;
    }
    throw ConfigError("need --shards or --ground-truth for evaluation data");
}

std::optional<SyntheticGroundTruth> optional_ground_truth(const json& p, Manifest& manifest) {
    const std::string path = str(p, "ground_truth");
    if (path.empty()) return std::nullopt;
    manifest.input(path);
    return load_ground_truth(path);
}

void check_width(const SaeParams& params, const Matrix& rows) {
    if (params.input_dim() != rows.cols()) {
        throw FormatError("d_model", "model expects width " + std::to_string(params.input_dim()) +
                                         " but the data has width " + std::to_string(rows.cols()));
    }
}

// The activation stream training reads from.
std::unique_ptr<RowSource> training_source(const json& p, const TrainConfig& config, Manifest& manifest) {
    const std::string shards = str(p, "shards");
    const std::string gt_path = str(p, "ground_truth");
    if (!shards.empty() && !gt_path.empty()) throw ConfigError("give either --shards or --ground-truth, not both");
    if (!shards.empty()) {
        manifest.input(shards);
        return std::make_unique<PrefetchingSource>(std::make_unique<ShardDirectorySource>(shards), 4096, 8);
    }
    if (!gt_path.empty()) {
        manifest.input(gt_path);
        const std::uint64_t samples = u64(p, "samples");
        std::optional<std::uint64_t> limit;
        if (samples > 0) limit = samples;
        return std::make_unique<SyntheticSource>(load_ground_truth(gt_path), derive_seed(config.seed, "cli/train-data"),
                                                 limit);
    }
    throw ConfigError("train needs --shards or --ground-truth");
}

void report_warnings(const TrainResult& result, Context& ctx, Manifest& manifest) {
    for (const std::string& w : result.warnings) {
        ctx.err << "warning: " << w << '\n';
        manifest.warn(w);
    }
}

json model_metadata(const TrainConfig& config, const TrainResult& result) {
    return {{"kind", "model"},
            {"coordinates", "raw"},
            {"config", to_json(config)},
            {"normalization_factor", result.norm_factor},
            {"steps_completed", result.steps_completed},
            {"truncated", result.truncated},
            {"tool_version", kVersion}};
}

// ---------------------------------------------------------------- commands

void gen_synthetic(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const fs::path out = require_out(p);
    Manifest manifest("gen-synthetic");
    const auto n = static_cast<Index>(u64(p, "n"));
    const auto m_true = static_cast<Index>(u64(p, "m_true"));
    const std::uint64_t count = u64(p, "count");
    const std::uint64_t shard_rows = u64(p, "shard_rows");
    const std::uint64_t seed = u64(p, "seed");
    if (n < 1 || m_true < 1) throw ConfigError("--n and --m-true must be >= 1");
    if (count < 1) throw ConfigError("--count must be >= 1");
    if (shard_rows < 1) throw ConfigError("--shard-rows must be >= 1");

    const SyntheticGroundTruth gt = synth_ground_truth(n, m_true, f64(p, "k"), seed, f64(p, "offset_norm"));
    const fs::path shard_dir = out / "shards";
    fs::create_directories(shard_dir);
    for (const fs::path& old : list_shards(shard_dir)) {
        fs::remove(old);
        fs::remove(shard_meta_path(old));
    }

    SyntheticSampler sampler(gt, derive_seed(seed, "cli/gen-synthetic"));
    std::uint64_t written = 0;
    for (std::uint64_t index = 0; written < count; ++index) {
        const std::uint64_t rows = std::min(shard_rows, count - written);
        ActivationBatch batch;
        batch.rows.resize(static_cast<Index>(rows), n);
        for (Index i = 0; i < batch.rows.rows(); ++i) sampler.next(batch.rows.row(i).data());
        char name[32];
        std::snprintf(name, sizeof name, "shard_%05llu", static_cast<unsigned long long>(index));
        const fs::path path = shard_dir / (std::string(name) + kShardExtension);
        write_shard(path, batch);
        write_shard_meta(path, {{"generator", "synthetic"},
                                {"n", n},
                                {"m_true", m_true},
                                {"k_active", gt.k_active},
                                {"coeff_law", gt.coeff_law()},
                                {"offset_norm", p.at("offset_norm")},
                                {"seed", seed},
                                {"shard_index", index},
                                {"first_row", written}});
        manifest.artifact(path);
        manifest.artifact(shard_meta_path(path));
        written += rows;
    }

    SaeParams truth = SaeParams::zeros(n, m_true);
    truth.w_dec = gt.dictionary;
    truth.w_enc = gt.dictionary.transpose();
    truth.b_dec = gt.x0;
    truth.theta.setOnes();
    const fs::path truth_path = out / "ground_truth.saemdl";
    write_model(truth_path, truth,
                {{"kind", "ground_truth"},
                 {"note", "w_dec holds the planted dictionary and b_dec the offset; w_enc, b_enc and theta are placeholders"},
                 {"n", n},
                 {"m_true", m_true},
                 {"k_active", gt.k_active},
                 {"coeff_min", gt.coeff_min},
                 {"coeff_max", gt.coeff_max},
                 {"offset_norm", p.at("offset_norm")},
                 {"seed", seed}});
    manifest.artifact(truth_path);
    manifest.write(out, r, seed);
    ctx.out << "wrote " << count << " rows of width " << n << " to " << shard_dir.string() << '\n';
}

void check_resume_config(const TrainConfig& config, const json& stored) {
    const json now = to_json(config);
    for (const auto& [key, value] : now.items()) {
        if (key == "total_tokens") continue;
        if (!stored.contains(key) || stored.at(key) != value) {
            throw ConfigError("config key '" + key + "' differs from the checkpoint's");
        }
    }
}

void train_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const TrainConfig& config = *r.train;
    const fs::path out = require_out(p);
    Manifest manifest("train");
    std::unique_ptr<RowSource> source = training_source(p, config, manifest);

    TrainOptions options;
    const std::string resume = str(p, "resume");
    if (!resume.empty()) {
        manifest.input(resume);
        check_resume_config(config, read_model(resume).metadata.at("config"));
        options.resume = read_checkpoint(resume);
    }
    const fs::path ckpt_path = out / "checkpoint.saemdl";
    options.on_checkpoint = [&](const TrainCheckpoint& ck) { write_checkpoint(ckpt_path, ck, config); };
    const std::int64_t total = config.total_steps();
    options.on_log = [&](const TrainLogEntry& e) {
        ctx.err << "step " << e.step << '/' << total << " loss " << num(e.loss.total) << " l0 "
                << num(e.loss.mean_l0) << '\n';
    };

    const TrainResult result = train(config, *source, options);
    report_warnings(result, ctx, manifest);
    write_checkpoint(ckpt_path, TrainCheckpoint{result.params, result.adam, result.norm_factor, result.steps_completed},
                     config);

    const fs::path model_path = out / "model.saemdl";
    write_model(model_path, rescale_for_raw_inputs(result.params, result.norm_factor), model_metadata(config, result));

    std::string log;
    for (const TrainLogEntry& e : result.log) log += to_json(e).dump() + '\n';
    const fs::path log_path = out / "train_log.jsonl";
    write_text(log_path, log);

    manifest.artifact(model_path);
    manifest.artifact(log_path);
    manifest.artifact(ckpt_path);
    manifest.artifact(ckpt_path.string() + ".state");
    manifest.write(out, r, config.seed);
    ctx.out << "trained " << result.steps_completed << " steps; model written to " << model_path.string() << '\n';
}

void eval_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const fs::path out = require_out(p);
    Manifest manifest("eval");
    const std::uint64_t seed = u64(p, "seed");
    manifest.input(str(p, "model"));
    const SaeParams params = load_raw_params(str(p, "model"));
    const auto gt = optional_ground_truth(p, manifest);
    const Matrix x = evaluation_rows(p, gt, seed, "samples", manifest);
    check_width(params, x);

    std::optional<SyntheticDownstreamEvaluator> evaluator;
    if (gt) evaluator.emplace(*gt, static_cast<Index>(u64(p, "samples")), derive_seed(seed, "cli/eval-downstream"));
    const EvalReport report = evaluate_sae(params, x, evaluator ? &*evaluator : nullptr);

    const std::string line = to_json(report).dump();
    const fs::path path = out / "eval.jsonl";
    write_text(path, line + '\n');
    manifest.artifact(path);
    manifest.write(out, r, seed);
    ctx.out << line << '\n';
}

void darkmatter_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const fs::path out = require_out(p);
    Manifest manifest("darkmatter");
    const std::uint64_t seed = u64(p, "seed");
    manifest.input(str(p, "model"));
    const SaeParams params = load_raw_params(str(p, "model"));
    const auto gt = optional_ground_truth(p, manifest);
    const Matrix x = evaluation_rows(p, gt, seed, "samples", manifest);
    check_width(params, x);

    const DarkMatterReport report = analyze_dark_matter(x, reconstruct(params, x), f64(p, "train_fraction"), seed);
    const std::string text = to_json(report).dump(2);
    const fs::path path = out / "darkmatter.json";
    write_text(path, text + '\n');
    manifest.artifact(path);
    manifest.write(out, r, seed);
    ctx.out << to_json(report).dump() << '\n';
}

void match_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const fs::path out = require_out(p);
    Manifest manifest("match");
    const std::string a_path = str(p, "model");
    const std::string b_path = str(p, "other");
    if (a_path.empty() || b_path.empty()) throw ConfigError("match needs --model and --other");
    manifest.input(a_path);
    manifest.input(b_path);
    const SaeParams a = load_raw_params(a_path);
    const SaeParams b = load_raw_params(b_path);
    if (a.dict_size() > b.dict_size()) {
        throw ConfigError("--model has more features (" + std::to_string(a.dict_size()) + ") than --other (" +
                          std::to_string(b.dict_size()) + "); pass the narrower dictionary as --model");
    }
    const MatchResult result = encoder_decoder_consistency(a, b);
    const double threshold = f64(p, "threshold");
    const Index above = (result.similarities.array() >= threshold).count();

    json j = to_json(result);
    j["threshold"] = threshold;
    j["fraction_above_threshold"] = static_cast<double>(above) / static_cast<double>(std::max<Index>(1, a.dict_size()));
    const fs::path json_path = out / "match.json";
    write_text(json_path, j.dump(2) + '\n');
    const fs::path scatter_path = out / "match_scatter.csv";
    write_text(scatter_path, scatter_csv(result));
    const fs::path hist_path = out / "max_cosine_histogram.csv";
    write_text(hist_path, to_csv(max_cosine_histogram(a.w_dec, b.w_dec, static_cast<Index>(u64(p, "bins")))));

    manifest.artifact(json_path);
    manifest.artifact(scatter_path);
    manifest.artifact(hist_path);
    manifest.write(out, r, 0);
    ctx.out << json{{"mean_similarity", result.mean_similarity},
                    {"fraction_above_threshold", j["fraction_above_threshold"]},
                    {"consistent_count", result.consistent_count}}
                   .dump()
            << '\n';
}

void sweep_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    const TrainConfig& base = *r.train;
    const fs::path out = require_out(p);
    Manifest manifest("sweep");
    const std::vector<double> targets = p.at("l0_targets").get<std::vector<double>>();
    if (targets.empty()) throw ConfigError("--l0-targets needs at least one value");
    std::vector<std::int64_t> widths;
    for (double w : p.at("dict_sizes").get<std::vector<double>>()) widths.push_back(static_cast<std::int64_t>(w));
    if (widths.empty()) widths.push_back(base.dict_size);

    const auto gt = optional_ground_truth(p, manifest);
    const Matrix x = evaluation_rows(p, gt, base.seed, "eval_samples", manifest);
    std::optional<SyntheticDownstreamEvaluator> evaluator;
    if (gt) {
        evaluator.emplace(*gt, static_cast<Index>(u64(p, "eval_samples")), derive_seed(base.seed, "cli/eval-downstream"));
    }

    const fs::path model_dir = out / "models";
    fs::create_directories(model_dir);
    std::string csv = "width,l0,fve,loss_recovered,cosine,gamma\n";
    std::string jsonl;
    for (std::int64_t width : widths) {
        for (double target : targets) {
            TrainConfig config = base;
            config.dict_size = width;
            config.l0_target = target;
            Manifest scratch("sweep");
            std::unique_ptr<RowSource> source = training_source(p, config, scratch);
            ctx.err << "sweep: width " << width << " l0_target " << num(target) << '\n';
            const TrainResult result = train(config, *source);
            report_warnings(result, ctx, manifest);
            const SaeParams raw = rescale_for_raw_inputs(result.params, result.norm_factor);
            check_width(raw, x);

            const fs::path model_path = model_dir / ("model_w" + std::to_string(width) + "_l0_" + num(target) + ".saemdl");
            write_model(model_path, raw, model_metadata(config, result));
            manifest.artifact(model_path);

            const EvalReport report = evaluate_sae(raw, x, evaluator ? &*evaluator : nullptr);
            json j = to_json(report);
            j["l0_target"] = target;
            j["model"] = model_path.string();
            jsonl += j.dump() + '\n';
            csv += std::to_string(report.width) + ',' + num(report.mean_l0) + ',' + num(report.fve) + ',' +
                   (report.loss_recovered ? num(*report.loss_recovered) : "") + ',' + num(report.cosine_mean) + ',' +
                   (report.gamma ? num(*report.gamma) : "") + '\n';
        }
    }
    for (const std::string& input : std::vector<std::string>{str(p, "shards"), str(p, "ground_truth")}) {
        if (!input.empty()) manifest.input(input);
    }
    const fs::path csv_path = out / "sweep.csv";
    write_text(csv_path, csv);
    const fs::path jsonl_path = out / "sweep.jsonl";
    write_text(jsonl_path, jsonl);
    manifest.artifact(csv_path);
    manifest.artifact(jsonl_path);
    manifest.write(out, r, base.seed);
    ctx.out << csv;
}

json inspect_one(const fs::path& path) {
    const ShardHeader h = read_shard_header(path);
    const ActivationBatch batch = read_shard(path);
    for (Index i = 0; i < batch.rows.rows(); ++i) {
        if (!batch.rows.row(i).allFinite()) {
            throw FormatError("payload", path.string() + ": non-finite value in row " + std::to_string(i));
        }
    }
    json j = {{"path", path.string()},
              {"d_model", h.d_model},
              {"dtype_code", h.dtype_code},
              {"dtype", "f32"},
              {"n_rows", h.n_rows},
              {"mean_squared_norm", batch.rows.squaredNorm() / static_cast<double>(batch.rows.rows())}};
    if (auto meta = read_shard_meta(path)) {
        j["meta"] = *meta;
        // Extractor sidecars describe fixed-length contexts with a skipped prefix.
        if (meta->contains("context_len") && meta->contains("token_skip") && meta->contains("n_contexts")) {
            const auto context_len = meta->at("context_len").get<std::uint64_t>();
            const auto skip = meta->at("token_skip").get<std::uint64_t>();
            const auto contexts = meta->at("n_contexts").get<std::uint64_t>();
            if (skip >= context_len) throw FormatError("meta.json", "token_skip must be < context_len");
            const std::uint64_t per_context = context_len - skip;
            if (per_context * contexts != h.n_rows) {
                throw FormatError("n_rows", path.string() + ": " + std::to_string(h.n_rows) + " rows but " +
                                                std::to_string(contexts) + " contexts of " +
                                                std::to_string(per_context) + " kept tokens");
            }
            j["rows_per_context"] = per_context;
        }
        if (meta->contains("d_model") && meta->at("d_model").get<std::uint64_t>() != h.d_model) {
            throw FormatError("d_model", path.string() + ": header and meta.json disagree");
        }
    }
    return j;
}

void inspect_cmd(const Resolved& r, Context& ctx) {
    const json& p = r.params;
    Manifest manifest("inspect-shard");
    std::vector<std::string> inputs = p.at("paths").get<std::vector<std::string>>();
    if (!str(p, "shards").empty()) inputs.push_back(str(p, "shards"));
    if (inputs.empty()) throw ConfigError("inspect-shard needs a shard file or directory");

    std::vector<fs::path> files;
    for (const std::string& in : inputs) {
        manifest.input(in);
        if (fs::is_directory(in)) {
            const auto found = list_shards(in);
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.emplace_back(in);
        }
    }
    if (files.empty()) throw ConfigError("no " + std::string(kShardExtension) + " files found");

    json all = json::array();
    std::uint32_t width = 0;
    for (const fs::path& f : files) {
        json j = inspect_one(f);
        if (width == 0) width = j["d_model"].get<std::uint32_t>();
        if (j["d_model"].get<std::uint32_t>() != width) {
            throw FormatError("d_model", f.string() + " has width " + j["d_model"].dump() + ", expected " +
                                             std::to_string(width));
        }
        ctx.out << j.dump() << '\n';
        all.push_back(std::move(j));
    }
    if (!str(p, "out").empty()) {
        const fs::path out = require_out(p);
        const fs::path path = out / "inspect.json";
        write_text(path, all.dump(2) + '\n');
        manifest.artifact(path);
        manifest.write(out, r, 0);
    }
}

// ------------------------------------------------------------- registration

struct Command {
    std::string name;
    std::string help;
    ParamSet params;
    std::function<void(const Resolved&, Context&)> run;
    std::string positional;
};

void add_evaluation_data(ParamSet& ps) {
    ps.add("shards", "", "Directory of .saeact shards")
        .add("ground_truth", "", "ground_truth.saemdl from gen-synthetic; enables loss recovered")
        .add("max_rows", 0, "Cap on shard rows read (0 = all)");
}

std::vector<Command> make_commands() {
    std::vector<Command> cmds;
    {
        Command c{"gen-synthetic", "Write synthetic activation shards and their ground-truth dictionary", {}, gen_synthetic, ""};
        c.params.add("out", "", "Output directory")
            .add("n", 64, "Input dimension")
            .add("m_true", 128, "Number of planted features")
            .add("k", 5.0, "Expected active features per sample")
            .add("count", 200000, "Rows to generate")
            .add("shard_rows", 100000, "Rows per shard file")
            .add("offset_norm", 0.5, "Norm of the constant offset x0")
            .add("seed", 0, "Seed");
        cmds.push_back(std::move(c));
    }
    {
        Command c{"train", "Train a JumpReLU SAE", {}, train_cmd, ""};
        c.params.add("out", "", "Output directory")
            .add("shards", "", "Directory of .saeact shards")
            .add("ground_truth", "", "Stream synthetic rows from this ground-truth file instead of shards")
            .add("samples", 0, "Synthetic rows available (0 = unbounded)")
            .add("resume", "", "Checkpoint to resume from")
            .with_train_config();
        cmds.push_back(std::move(c));
    }
    {
        Command c{"eval", "Report L0, FVE, cosine, gamma and (with a ground truth) loss recovered", {}, eval_cmd, ""};
        c.params.add("out", "", "Output directory").add("model", "", "Model file");
        add_evaluation_data(c.params);
        c.params.add("samples", 20000, "Held-out synthetic rows").add("seed", 0, "Seed for held-out data");
        cmds.push_back(std::move(c));
    }
    {
        Command c{"darkmatter", "Linear probes of the reconstruction error", {}, darkmatter_cmd, ""};
        c.params.add("out", "", "Output directory").add("model", "", "Model file");
        add_evaluation_data(c.params);
        c.params.add("samples", 20000, "Held-out synthetic rows")
            .add("train_fraction", 0.8, "Fraction of rows used to fit the probes")
            .add("seed", 0, "Seed for the split and held-out data");
        cmds.push_back(std::move(c));
    }
    {
        Command c{"match", "Hungarian matching between two dictionaries", {}, match_cmd, ""};
        c.params.add("out", "", "Output directory")
            .add("model", "", "Narrower model (or ground truth)")
            .add("other", "", "Model matched against")
            .add("bins", 50, "Histogram bins over [-1, 1]")
            .add("threshold", 0.9, "Cosine threshold for fraction_above_threshold");
        cmds.push_back(std::move(c));
    }
    {
        Command c{"sweep", "Train and evaluate over a grid of L0 targets", {}, sweep_cmd, ""};
        c.params.add("out", "", "Output directory")
            .add("shards", "", "Directory of .saeact shards")
            .add("ground_truth", "", "Synthetic ground-truth file")
            .add("samples", 0, "Synthetic training rows (0 = unbounded)")
            .add("eval_samples", 20000, "Held-out synthetic rows")
            .add("max_rows", 0, "Cap on shard rows used for evaluation (0 = all)")
            .add("l0_targets", json::array(), "Comma-separated L0 targets")
            .add("dict_sizes", json::array(), "Comma-separated widths (default: --dict-size)")
            .with_train_config();
        cmds.push_back(std::move(c));
    }
    {
        Command c{"inspect-shard", "Validate shards and print their headers", {}, inspect_cmd, "paths"};
        c.params.add("out", "", "Optional output directory for inspect.json")
            .add("shards", "", "Directory of shards")
            .add("paths", json::array(), "Shard files or directories");
        cmds.push_back(std::move(c));
    }
    return cmds;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse autoencoder toolkit", "saekit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::vector<Command> cmds = make_commands();
    std::vector<std::pair<CLI::App*, Command*>> subs;
    for (Command& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        c.params.register_flags(*sub, c.positional);
        subs.emplace_back(sub, &c);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    Context ctx{out, err};
    for (auto& [sub, cmd] : subs) {
        if (!sub->parsed()) continue;
        try {
            cmd->run(cmd->params.resolve(), ctx);
            return 0;
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}

}  // namespace saekit::cli
