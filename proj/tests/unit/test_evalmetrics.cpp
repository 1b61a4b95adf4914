#include <doctest.h>

#include "oracles.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalmetrics.hpp"

using namespace saekit;

TEST_CASE("mean_l0") {
    Matrix codes(2, 4);
    codes << 0, 1.2, 0, 3, 0, 0, 0, 0;
    CHECK(mean_l0(codes) == 1.0);
    CHECK(mean_l0(Matrix::Zero(5, 3)) == 0.0);

    Rng rng(1);
    Matrix sparse = oracle::random_matrix(100, 30, rng);
    for (Index i = 0; i < sparse.size(); ++i) {
        if (uniform01(rng) < 0.8) sparse.data()[i] = 0.0;
    }
    std::size_t count = 0;
    for (Index r = 0; r < 100; ++r)
        for (Index c = 0; c < 30; ++c) count += sparse(r, c) != 0.0 ? 1 : 0;
    CHECK(mean_l0(sparse) == doctest::Approx(count / 100.0));
}

TEST_CASE("fraction of variance explained") {
    Rng rng(2);
    const Matrix x = oracle::random_matrix(50, 6, rng, 2.0);
    CHECK(fraction_variance_explained(x, x) == doctest::Approx(1.0));
    Matrix mean_rows(50, 6);
    mean_rows.rowwise() = x.colwise().mean();
    CHECK(std::abs(fraction_variance_explained(x, mean_rows)) < 1e-12);

    const Matrix x_hat = x + oracle::random_matrix(50, 6, rng, 0.7);
    const double expected =
        1.0 - oracle::two_pass_total_variance(x - x_hat) / oracle::two_pass_total_variance(x);
    CHECK(std::abs(fraction_variance_explained(x, x_hat) - expected) < 1e-6);
    CHECK(fraction_variance_explained(x, x_hat) <= 1.0);

    Matrix flat = Matrix::Constant(4, 3, 2.0);
    CHECK_THROWS_AS(fraction_variance_explained(flat, flat), DegenerateInputError);
    CHECK_THROWS_AS(fraction_variance_explained(x.topRows(1), x.topRows(1)), ConfigError);
}

TEST_CASE("cosine mean") {
    Rng rng(3);
    const Matrix x = oracle::random_matrix(20, 5, rng);
    CHECK(cosine_mean(x, 3.0 * x) == doctest::Approx(1.0));
    CHECK(cosine_mean(x, -x) == doctest::Approx(-1.0));
    Matrix a(2, 2), b(2, 2);
    a << 1, 0, 0, 2;
    b << 0, 5, -3, 0;
    CHECK(std::abs(cosine_mean(a, b)) < 1e-6);

    Matrix z = x;
    z.row(7).setZero();
    try {
        cosine_mean(x, z);
        FAIL("expected DegenerateInputError");
    } catch (const DegenerateInputError& e) {
        CHECK(std::string(e.what()).find('7') != std::string::npos);
    }
}

TEST_CASE("relative reconstruction bias") {
    Rng rng(4);
    const Matrix x = oracle::random_matrix(64, 8, rng);
    CHECK(reconstruction_bias_gamma(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reconstruction_bias_gamma(x, 0.5 * x) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(reconstruction_bias_gamma(x, Matrix::Zero(64, 8)), DegenerateInputError);

    for (int trial = 0; trial < 20; ++trial) {
        const Matrix xr = oracle::random_matrix(40, 6, rng);
        const Matrix x_hat = 0.8 * xr + oracle::random_matrix(40, 6, rng, 0.3);
        const GammaForms f = reconstruction_bias_forms(xr, x_hat);
        CHECK(oracle::close(f.ratio_form, f.distance_form, 1e-6));
        const double g = reconstruction_bias_gamma(xr, x_hat);
        for (double c : {0.25, 0.5, 1.0, 2.0, 3.7}) {
            CHECK(oracle::close(reconstruction_bias_gamma(xr, c * x_hat), c * g, 1e-9));
        }
    }
}

TEST_CASE("loss recovered") {
    CHECK(loss_recovered(2.0, 2.0, 5.0) == 1.0);
    CHECK(loss_recovered(5.0, 2.0, 5.0) == 0.0);
    CHECK(loss_recovered(3.5, 2.0, 5.0) == doctest::Approx(0.5));
    // Affine in ce_sae.
    const double a = loss_recovered(2.3, 2.0, 5.0);
    const double b = loss_recovered(4.1, 2.0, 5.0);
    CHECK(loss_recovered(3.2, 2.0, 5.0) == doctest::Approx(0.5 * (a + b)));
    CHECK_THROWS_AS(loss_recovered(3.0, 2.0, 2.0), DegenerateInputError);
}

TEST_CASE("synthetic downstream evaluator orders identity below zero") {
    const SyntheticGroundTruth gt = synth_ground_truth(16, 24, 3.0, 5);
    const SyntheticDownstreamEvaluator ev(gt, 2000, 17);
    CHECK(ev.input_dim() == 16);
    const double ce_id = downstream_ce(ev, [](const Matrix& m) { return m; });
    const double ce_zero = downstream_ce(ev, [](const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); });
    CHECK(ce_id < ce_zero);
    CHECK(ce_zero == doctest::Approx(std::log(24.0)).epsilon(0.2));
    // Shrinking toward x0 interpolates between the two.
    const double ce_half = downstream_ce(ev, [&](const Matrix& m) {
        Matrix out = 0.5 * m;
        out.rowwise() += 0.5 * gt.x0.transpose();
        return out;
    });
    CHECK(ce_id < ce_half);
    CHECK_THROWS(downstream_ce(ev, [](const Matrix& m) { return Matrix(m.leftCols(3)); }));
}

TEST_CASE("evaluate_sae reports on the ground-truth dictionary") {
    const SyntheticGroundTruth gt = synth_ground_truth(12, 20, 2.0, 6);
    SaeParams p = SaeParams::zeros(12, 20);
    p.w_dec = gt.dictionary;
    p.b_dec = gt.x0;
    p.w_enc = gt.dictionary.transpose();
    p.b_enc = -p.w_enc * gt.x0;
    p.theta.setConstant(0.3);
    const Matrix x = synth_generate(gt, 500, 8).batch.rows;
    const SyntheticDownstreamEvaluator ev(gt, 500, 9);
    const EvalReport r = evaluate_sae(p, x, &ev);
    CHECK(r.width == 20);
    CHECK(r.sample_count == 500);
    CHECK(r.fve <= 1.0);
    CHECK(r.cosine_mean <= 1.0);
    CHECK(r.cosine_mean >= -1.0);
    REQUIRE(r.gamma.has_value());
    CHECK(*r.gamma > 0.0);
    REQUIRE(r.loss_recovered.has_value());
    const nlohmann::json j = to_json(r);
    for (const char* key : {"width", "mean_l0", "fve", "cosine_mean", "gamma", "loss_recovered", "sample_count"})
        CHECK(j.contains(key));

    const EvalReport no_ev = evaluate_sae(p, x);
    CHECK_FALSE(no_ev.loss_recovered.has_value());
    CHECK(to_json(no_ev)["loss_recovered"].is_null());
}
