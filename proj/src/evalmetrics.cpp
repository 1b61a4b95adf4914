#include "saekit/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "saekit/errors.hpp"

namespace saekit {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ConfigError(std::string(what) + ": shape mismatch");
    }
}

// Sum over dimensions of the (1/B) variance about the column means.
double total_variance(const Matrix& m) {
    const Eigen::RowVectorXd mean = m.colwise().mean();
    return (m.rowwise() - mean).squaredNorm() / static_cast<double>(m.rows());
}

}  // namespace

double mean_l0(const Matrix& codes) {
    if (codes.rows() < 1) throw ConfigError("mean_l0 needs at least one row");
    return static_cast<double>((codes.array() != 0.0).count()) / static_cast<double>(codes.rows());
}

double fraction_variance_explained(const Matrix& x, const Matrix& x_hat) {
    require_same_shape(x, x_hat, "fraction_variance_explained");
    if (x.rows() < 2) throw ConfigError("fraction_variance_explained needs at least two rows");
    const double var_x = total_variance(x);
    if (!(var_x > 0.0)) throw DegenerateInputError("input has zero variance");
    return 1.0 - total_variance(x - x_hat) / var_x;
}

double cosine_mean(const Matrix& x, const Matrix& x_hat) {
    require_same_shape(x, x_hat, "cosine_mean");
    if (x.rows() < 1) throw ConfigError("cosine_mean needs at least one row");
    double sum = 0.0;
    for (Index r = 0; r < x.rows(); ++r) {
        const double nx = x.row(r).norm();
        const double nh = x_hat.row(r).norm();
        if (nx == 0.0 || nh == 0.0) {
            throw DegenerateInputError("row " + std::to_string(r) + " has zero norm");
        }
        sum += x.row(r).dot(x_hat.row(r)) / (nx * nh);
    }
    return sum / static_cast<double>(x.rows());
}

GammaForms reconstruction_bias_forms(const Matrix& x, const Matrix& x_hat) {
    require_same_shape(x, x_hat, "reconstruction_bias_gamma");
    if (x.rows() < 1) throw ConfigError("reconstruction_bias_gamma needs at least one row");
    const double rows = static_cast<double>(x.rows());
    const double a = x_hat.squaredNorm() / rows;
    const double b = x_hat.cwiseProduct(x).sum() / rows;
    const double c = x.squaredNorm() / rows;
    const double d = (x_hat - x).squaredNorm() / rows;
    const double scale = std::max({a, c, 1e-300});
    if (std::abs(b) < 1e-12 * scale) {
        throw DegenerateInputError("E[x_hat . x] vanishes; reconstruction bias is undefined");
    }
    return {a / b, 2.0 * a / (a + c - d)};
}

double reconstruction_bias_gamma(const Matrix& x, const Matrix& x_hat) {
    const GammaForms g = reconstruction_bias_forms(x, x_hat);
    if (std::abs(g.ratio_form - g.distance_form) > 1e-6 * std::abs(g.ratio_form)) {
        throw NumericError("closed forms of the reconstruction bias disagree: " + std::to_string(g.ratio_form) +
                           " vs " + std::to_string(g.distance_form));
    }
    return g.ratio_form;
}

double loss_recovered(double ce_sae, double ce_id, double ce_zero) {
    if (ce_zero == ce_id) throw DegenerateInputError("loss recovered undefined: CE(zero) == CE(identity)");
    return 1.0 - (ce_sae - ce_id) / (ce_zero - ce_id);
}

double downstream_ce(const DownstreamEvaluator& evaluator, const Substitution& substitution) {
    return evaluator.cross_entropy(substitution);
}

SyntheticDownstreamEvaluator::SyntheticDownstreamEvaluator(const SyntheticGroundTruth& gt, Index count,
                                                           std::uint64_t seed, double sharpness) {
    if (count < 1) throw ConfigError("evaluator needs count >= 1");
    const SyntheticSample sample = synth_generate(gt, count, seed);
    std::vector<Index> kept;
    for (Index r = 0; r < count; ++r) {
        Index arg = 0;
        const double best = sample.coefficients.row(r).maxCoeff(&arg);
        if (best > 0.0) {
            kept.push_back(r);
            labels_.push_back(arg);
        }
    }
    if (kept.empty()) throw DegenerateInputError("synthetic evaluator drew no sample with an active feature");
    inputs_.resize(static_cast<Index>(kept.size()), gt.input_dim());
    for (std::size_t i = 0; i < kept.size(); ++i) inputs_.row(static_cast<Index>(i)) = sample.batch.rows.row(kept[i]);
    readout_ = sharpness * gt.dictionary.transpose();
    bias_ = -(readout_ * gt.x0);
}

double SyntheticDownstreamEvaluator::cross_entropy(const Substitution& substitution) const {
    const Matrix substituted = substitution(inputs_);
    if (substituted.rows() != inputs_.rows() || substituted.cols() != inputs_.cols()) {
        throw ConfigError("substitution changed the batch shape");
    }
    Matrix logits = substituted * readout_.transpose();
    logits.rowwise() += bias_.transpose();
    double total = 0.0;
    for (Index r = 0; r < logits.rows(); ++r) {
        const double peak = logits.row(r).maxCoeff();
        const double log_z = peak + std::log((logits.row(r).array() - peak).exp().sum());
        total += log_z - logits(r, labels_[static_cast<std::size_t>(r)]);
    }
    return total / static_cast<double>(logits.rows());
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j = {{"width", r.width},
                        {"sample_count", r.sample_count},
                        {"mean_l0", r.mean_l0},
                        {"fve", r.fve},
                        {"cosine_mean", r.cosine_mean}};
    j["gamma"] = r.gamma ? nlohmann::json(*r.gamma) : nlohmann::json(nullptr);
    j["loss_recovered"] = r.loss_recovered ? nlohmann::json(*r.loss_recovered) : nlohmann::json(nullptr);
    return j;
}

EvalReport evaluate_sae(const SaeParams& params, const Matrix& x, const DownstreamEvaluator* evaluator) {
    const Matrix codes = encode(params, x);
    const Matrix x_hat = decode(params, codes);
    EvalReport report;
    report.width = params.dict_size();
    report.sample_count = x.rows();
    report.mean_l0 = mean_l0(codes);
    report.fve = fraction_variance_explained(x, x_hat);
    report.cosine_mean = cosine_mean(x, x_hat);
    try {
        report.gamma = reconstruction_bias_gamma(x, x_hat);
    } catch (const DegenerateInputError&) {
        report.gamma.reset();
    }
    if (evaluator != nullptr) {
        const double ce_id = downstream_ce(*evaluator, [](const Matrix& m) { return m; });
        const double ce_zero = downstream_ce(*evaluator, [](const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()).eval(); });
        const double ce_sae = downstream_ce(*evaluator, [&](const Matrix& m) { return reconstruct(params, m); });
        report.loss_recovered = loss_recovered(ce_sae, ce_id, ce_zero);
    }
    return report;
}

}  // namespace saekit
