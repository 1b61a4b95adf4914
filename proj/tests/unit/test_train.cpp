#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "saekit/buffer.hpp"
#include "saekit/data.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalmetrics.hpp"
#include "saekit/train.hpp"

using namespace saekit;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config() {
    TrainConfig c;
    c.dict_size = 48;
    c.l0_target = 3;
    c.lr = 1e-3;
    c.lr_warmup_steps = 20;
    c.sparsity_warmup_steps = 100;
    c.batch_tokens = 256;
    c.total_tokens = 256 * 2000;
    c.buffer_rows = 2048;
    c.eval_interval = 10;
    c.seed = 5;
    return c;
}

const SyntheticGroundTruth& small_truth() {
    static const SyntheticGroundTruth gt = synth_ground_truth(16, 32, 3.0, 1);
    return gt;
}

bool same_params(const SaeParams& a, const SaeParams& b) {
    return a.w_enc == b.w_enc && a.b_enc == b.b_enc && a.w_dec == b.w_dec && a.b_dec == b.b_dec &&
           a.theta == b.theta;
}

}  // namespace

TEST_CASE("init_params is tied with unit decoder columns") {
    TrainConfig c = small_config();
    Rng rng(1);
    const Matrix rows = oracle::random_matrix(100, 16, rng);
    const SaeParams p = init_params(c, rows);
    CHECK(p.dict_size() == 48);
    for (Index j = 0; j < 48; ++j) CHECK(p.w_dec.col(j).norm() == doctest::Approx(1.0));
    CHECK(p.w_enc == p.w_dec.transpose());
    CHECK(p.b_enc.isZero());
    CHECK((p.b_dec - rows.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.theta.array() == c.theta_init).all());
    CHECK(same_params(init_params(c, rows), p));
}

TEST_CASE("zero steps returns the initialization") {
    TrainConfig c = small_config();
    c.total_tokens = 100;  // fewer than one batch
    SyntheticSource src(small_truth(), 2);
    const TrainResult r = train(c, src);
    CHECK(r.steps_completed == 0);
    CHECK(r.log.empty());
    CHECK(r.adam.step == 0);
    CHECK_FALSE(r.truncated);

    SyntheticSource again(small_truth(), 2);
    ActivationBuffer buf(again, c.buffer_rows, c.seed);
    const auto fill = buf.prime();
    const double s = normalization_factor(fill);
    CHECK(r.norm_factor == s);
    CHECK(same_params(r.params, init_params(c, fill / s)));
}

TEST_CASE("training on a small planted problem") {
    TrainConfig c = small_config();
    SyntheticSource src(small_truth(), 2);
    c.eval_interval = 50;
    const TrainResult r = train(c, src);
    REQUIRE(r.log.size() == 40);
    CHECK(r.steps_completed == 2000);
    CHECK(r.log.back().step == 2000);
    CHECK((r.params.theta.array() > 0.0).all());
    CHECK(r.log.back().loss.total < r.log.front().loss.total);

    // Mean L0 over the last tenth of the logged steps sits near the target.
    double l0 = 0.0;
    for (std::size_t i = 36; i < 40; ++i) l0 += r.log[i].loss.mean_l0;
    l0 /= 4.0;
    CHECK(std::abs(l0 - c.l0_target) <= 0.2 * c.l0_target);

    const SaeParams raw = rescale_for_raw_inputs(r.params, r.norm_factor);
    const Matrix x = synth_generate(small_truth(), 4000, 77).batch.rows;
    const EvalReport report = evaluate_sae(raw, x);
    CHECK(report.fve > 0.85);
    CHECK(std::abs(report.mean_l0 - c.l0_target) <= 0.2 * c.l0_target);
    CHECK(std::abs(report.mean_l0 - mean_l0(encode(r.params, x / r.norm_factor))) < 1e-12);
}

TEST_CASE("identical seeds give identical runs") {
    TrainConfig c = small_config();
    c.total_tokens = 256 * 60;
    SyntheticSource a(small_truth(), 2), b(small_truth(), 2);
    const TrainResult ra = train(c, a);
    const TrainResult rb = train(c, b);
    REQUIRE(ra.log.size() == rb.log.size());
    for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].loss.total == rb.log[i].loss.total);
    CHECK(same_params(ra.params, rb.params));

    c.seed = 6;
    SyntheticSource d(small_truth(), 2);
    CHECK_FALSE(same_params(train(c, d).params, ra.params));
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
    TrainConfig c = small_config();
    c.total_tokens = 256 * 50;
    const fs::path dir = fs::temp_directory_path() / "saekit_test_train";
    fs::create_directories(dir);
    const fs::path ckpt_path = dir / "ckpt.saemdl";

    SyntheticSource full_src(small_truth(), 2);
    TrainOptions opts;
    opts.on_checkpoint = [&](const TrainCheckpoint& ck) {
        if (ck.step == 20) write_checkpoint(ckpt_path, ck, c);
    };
    const TrainResult full = train(c, full_src, opts);

    const TrainCheckpoint loaded = read_checkpoint(ckpt_path);
    CHECK(loaded.step == 20);
    CHECK(loaded.adam.step == 20);
    CHECK(loaded.norm_factor == full.norm_factor);

    SyntheticSource resumed_src(small_truth(), 2);
    TrainOptions resume;
    resume.resume = loaded;
    const TrainResult resumed = train(c, resumed_src, resume);
    CHECK(resumed.steps_completed == 50);
    CHECK(same_params(resumed.params, full.params));
    REQUIRE(resumed.log.size() == 3);
    CHECK(resumed.log.back().loss.total == full.log.back().loss.total);
}

TEST_CASE("a short source truncates with a warning") {
    TrainConfig c = small_config();
    SyntheticSource src(small_truth(), 2, 256 * 12);
    const TrainResult r = train(c, src);
    CHECK(r.truncated);
    CHECK(r.steps_completed == 12);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("12 of 2000") != std::string::npos);
}

TEST_CASE("train rejects a mismatched input_dim") {
    TrainConfig c = small_config();
    c.input_dim = 10;
    SyntheticSource src(small_truth(), 2);
    CHECK_THROWS_AS(train(c, src), ConfigError);
}
