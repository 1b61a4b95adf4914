#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "saekit/data.hpp"
#include "saekit/model_io.hpp"

using namespace saekit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "saekit_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<json> read_jsonl(const fs::path& p) {
    std::vector<json> lines;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) lines.push_back(json::parse(line));
    return lines;
}

// Small synthetic data set shared by several cases.
const fs::path& small_data() {
    static const fs::path dir = [] {
        const fs::path d = scratch("data");
        const Outcome o = run({"gen-synthetic", "--out", d.string(), "--n", "16", "--m-true", "32", "--k", "3",
                               "--count", "20000", "--shard-rows", "8000", "--seed", "1"});
        REQUIRE(o.status == 0);
        return d;
    }();
    return dir;
}

std::vector<std::string> small_train_flags() {
    return {"--dict-size", "48",   "--l0-target",    "3",    "--lr",           "1e-3", "--lr-warmup-steps",
            "20",          "--sparsity-warmup-steps", "100", "--batch-tokens", "256",  "--buffer-rows",
            "2048",        "--eval-interval",         "20"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

void check_manifest(const fs::path& dir, const std::string& command) {
    const json m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["command"] == command);
    CHECK(m.contains("tool_version"));
    CHECK(m.contains("seed"));
    for (const auto& a : m["artifacts"]) CHECK(fs::exists(a.get<std::string>()));
}

}  // namespace

TEST_CASE("gen-synthetic writes readable, reproducible shards") {
    const fs::path a = scratch("gen_a");
    const fs::path b = scratch("gen_b");
    for (const fs::path& d : {a, b}) {
        const Outcome o = run({"gen-synthetic", "--out", d.string(), "--n", "64", "--count", "1000", "--seed", "9"});
        REQUIRE(o.status == 0);
    }
    const fs::path shard = a / "shards" / "shard_00000.saeact";
    const ActivationBatch batch = read_shard(shard);
    CHECK(batch.rows.rows() == 1000);
    CHECK(batch.rows.cols() == 64);
    CHECK(slurp(shard) == slurp(b / "shards" / "shard_00000.saeact"));
    const json meta = *read_shard_meta(shard);
    CHECK(meta["n"] == 64);
    CHECK(meta["m_true"] == 128);
    CHECK(meta["seed"] == 9);
    CHECK(meta["k_active"] == 5.0);
    const ModelFile gt = read_model(a / "ground_truth.saemdl");
    CHECK(gt.metadata["kind"] == "ground_truth");
    CHECK(gt.params.dict_size() == 128);
    check_manifest(a, "gen-synthetic");
}

TEST_CASE("config keys are strict and flags override the file") {
    const fs::path d = scratch("config");
    const fs::path cfg = d / "cfg.json";
    std::ofstream(cfg) << R"({"dict_size": 48, "l0_taget": 3})";
    Outcome o = run({"train", "--config", cfg.string(), "--out", (d / "o").string(), "--ground-truth",
                     (small_data() / "ground_truth.saemdl").string()});
    CHECK(o.status != 0);
    CHECK(o.err.find("l0_taget") != std::string::npos);

    std::ofstream(cfg, std::ios::trunc) << R"({"dict_size": 48, "l0_target": 3, "total_tokens": 100, "lr": 0.5})";
    o = run({"train", "--config", cfg.string(), "--lr", "0.25", "--out", (d / "o").string(), "--ground-truth",
             (small_data() / "ground_truth.saemdl").string()});
    REQUIRE(o.status == 0);
    const json m = json::parse(slurp(d / "o" / "manifest.json"));
    CHECK(m["train_config"]["lr"] == 0.25);
    CHECK(m["train_config"]["dict_size"] == 48);

    o = run({"train", "--dict-size", "4.5", "--out", (d / "o").string()});
    CHECK(o.status != 0);
    CHECK(o.err.find("dict_size") != std::string::npos);

    std::ofstream(cfg, std::ios::trunc) << R"({"bins": "many"})";
    o = run({"match", "--config", cfg.string()});
    CHECK(o.status != 0);
    CHECK(o.err.find("bins") != std::string::npos);

    CHECK(run({"train", "--no-such-flag", "1"}).status != 0);
    CHECK(run({}).status != 0);
}

TEST_CASE("zero-step training writes a loadable model") {
    const fs::path d = scratch("zero");
    const Outcome o = run(concat({"train", "--out", d.string(), "--shards", (small_data() / "shards").string(),
                                  "--total-tokens", "0"},
                                 small_train_flags()));
    REQUIRE(o.status == 0);
    const ModelFile m = read_model(d / "model.saemdl");
    CHECK(m.params.dict_size() == 48);
    CHECK(m.metadata["steps_completed"] == 0);
    CHECK(read_jsonl(d / "train_log.jsonl").empty());
    check_manifest(d, "train");
}

TEST_CASE("resumed training reproduces the uninterrupted trajectory") {
    const fs::path d = scratch("resume");
    const std::string gt = (small_data() / "ground_truth.saemdl").string();
    auto flags = concat({"--ground-truth", gt}, small_train_flags());

    REQUIRE(run(concat({"train", "--out", (d / "full").string(), "--total-tokens", std::to_string(256 * 100)}, flags))
                .status == 0);
    REQUIRE(run(concat({"train", "--out", (d / "first").string(), "--total-tokens", std::to_string(256 * 40)}, flags))
                .status == 0);
    const Outcome o = run(concat({"train", "--out", (d / "second").string(), "--total-tokens",
                                  std::to_string(256 * 100), "--resume", (d / "first" / "checkpoint.saemdl").string()},
                                 flags));
    REQUIRE(o.status == 0);

    const auto full = read_jsonl(d / "full" / "train_log.jsonl");
    const auto second = read_jsonl(d / "second" / "train_log.jsonl");
    REQUIRE(full.size() == 5);
    REQUIRE(second.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const json& a = full[i + 2];
        const json& b = second[i];
        CHECK(a["step"] == b["step"]);
        const double x = a["total"].get<double>(), y = b["total"].get<double>();
        CHECK(std::abs(x - y) <= 1e-5 * std::abs(x));
    }

    // A checkpoint refuses a config that would change the trajectory.
    const Outcome bad = run(concat({"train", "--out", (d / "bad").string(), "--total-tokens", std::to_string(256 * 100),
                                    "--resume", (d / "first" / "checkpoint.saemdl").string(), "--seed", "3"},
                                   flags));
    CHECK(bad.status != 0);
    CHECK(bad.err.find("seed") != std::string::npos);
}

TEST_CASE("eval, darkmatter and match on a trained model") {
    const fs::path d = scratch("evaluate");
    const std::string shards = (small_data() / "shards").string();
    const std::string gt = (small_data() / "ground_truth.saemdl").string();
    REQUIRE(run(concat({"train", "--out", (d / "train").string(), "--shards", shards, "--total-tokens",
                        std::to_string(256 * 300)},
                       small_train_flags()))
                .status == 0);
    const std::string model = (d / "train" / "model.saemdl").string();

    Outcome o = run({"eval", "--out", (d / "eval").string(), "--model", model, "--shards", shards, "--ground-truth", gt});
    REQUIRE(o.status == 0);
    const auto report = read_jsonl(d / "eval" / "eval.jsonl");
    REQUIRE(report.size() == 1);
    CHECK(report[0]["fve"].get<double>() > 0.0);
    CHECK(report[0]["fve"].get<double>() <= 1.0);
    CHECK(report[0]["sample_count"] == 20000);
    CHECK(report[0]["loss_recovered"].is_number());
    check_manifest(d / "eval", "eval");

    // Identical inputs reproduce the report.
    REQUIRE(run({"eval", "--out", (d / "eval2").string(), "--model", model, "--shards", shards, "--ground-truth", gt})
                .status == 0);
    CHECK(slurp(d / "eval" / "eval.jsonl") == slurp(d / "eval2" / "eval.jsonl"));

    o = run({"darkmatter", "--out", (d / "dm").string(), "--model", model, "--ground-truth", gt, "--samples", "4000"});
    REQUIRE(o.status == 0);
    const json dm = json::parse(slurp(d / "dm" / "darkmatter.json"));
    for (const char* key : {"r2_norm_probe", "r2_vector_probe_mean", "fvu_nonlinear", "split_seed", "ridge_used"})
        CHECK(dm.contains(key));
    check_manifest(d / "dm", "darkmatter");

    o = run({"match", "--out", (d / "self").string(), "--model", model, "--other", model});
    REQUIRE(o.status == 0);
    const json self = json::parse(slurp(d / "self" / "match.json"));
    CHECK(self["mean_similarity"].get<double>() == doctest::Approx(1.0));
    CHECK(self["consistent_count"] == 48);
    CHECK(slurp(d / "self" / "match_scatter.csv").rfind("feature_index,decoder_sim,encoder_sim,consistent", 0) == 0);
    check_manifest(d / "self", "match");

    o = run({"match", "--out", (d / "wide").string(), "--model", model, "--other", gt});
    CHECK(o.status != 0);
}

TEST_CASE("width mismatch is reported") {
    const fs::path d = scratch("mismatch");
    REQUIRE(run({"gen-synthetic", "--out", (d / "other").string(), "--n", "8", "--count", "100"}).status == 0);
    const Outcome o = run({"eval", "--out", (d / "eval").string(), "--model",
                           (small_data() / "ground_truth.saemdl").string(), "--shards", (d / "other" / "shards").string()});
    CHECK(o.status == 1);
    CHECK(o.err.find("d_model") != std::string::npos);
}

TEST_CASE("sweep emits one row per target with increasing L0") {
    const fs::path d = scratch("sweep");
    auto flags = small_train_flags();
    const Outcome o = run(concat({"sweep", "--out", d.string(), "--ground-truth",
                                  (small_data() / "ground_truth.saemdl").string(), "--l0-targets", "2,4,8",
                                  "--total-tokens", std::to_string(256 * 1500), "--eval-samples", "5000"},
                                 flags));
    REQUIRE(o.status == 0);
    std::ifstream in(d / "sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "width,l0,fve,loss_recovered,cosine,gamma");
    std::vector<double> l0;
    for (std::string line; std::getline(in, line);) {
        std::stringstream ss(line);
        std::string width, value;
        std::getline(ss, width, ',');
        std::getline(ss, value, ',');
        CHECK(width == "48");
        l0.push_back(std::stod(value));
    }
    REQUIRE(l0.size() == 3);
    CHECK(l0[0] < l0[1]);
    CHECK(l0[1] < l0[2]);
    check_manifest(d, "sweep");
}

TEST_CASE("inspect-shard validates headers and extractor sidecars") {
    const fs::path d = scratch("inspect");
    Outcome o = run({"inspect-shard", (small_data() / "shards").string()});
    REQUIRE(o.status == 0);
    CHECK(std::count(o.out.begin(), o.out.end(), '\n') == 3);
    CHECK(json::parse(o.out.substr(0, o.out.find('\n')))["d_model"] == 16);

    ActivationBatch b;
    b.rows = Matrix::Ones(12, 5);
    const fs::path shard = d / "ctx.saeact";
    write_shard(shard, b);
    write_shard_meta(shard, {{"context_len", 4}, {"token_skip", 1}, {"n_contexts", 4}, {"d_model", 5}});
    o = run({"inspect-shard", shard.string(), "--out", (d / "report").string()});
    REQUIRE(o.status == 0);
    CHECK(json::parse(o.out)["rows_per_context"] == 3);
    check_manifest(d / "report", "inspect-shard");

    write_shard_meta(shard, {{"context_len", 4}, {"token_skip", 2}, {"n_contexts", 4}});
    CHECK(run({"inspect-shard", shard.string()}).status == 1);

    std::string bytes = slurp(shard);
    bytes[0] = 'Z';
    std::ofstream(d / "bad.saeact", std::ios::binary) << bytes;
    o = run({"inspect-shard", (d / "bad.saeact").string()});
    CHECK(o.status == 1);
    CHECK(o.err.find("magic") != std::string::npos);
    CHECK(run({"inspect-shard", (d / "missing.saeact").string()}).status == 1);
}
