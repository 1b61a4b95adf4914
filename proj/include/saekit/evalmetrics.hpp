#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <json.hpp>

#include "saekit/sae_model.hpp"
#include "saekit/synthetic.hpp"

namespace saekit {

// Mean over rows of the number of strictly nonzero entries.
double mean_l0(const Matrix& codes);

// 1 - Var(x - x_hat) / Var(x), where Var sums the per-dimension (1/B)
// variances about the per-dimension means.
double fraction_variance_explained(const Matrix& x, const Matrix& x_hat);

// Mean over rows of cos(x_r, x_hat_r).
double cosine_mean(const Matrix& x, const Matrix& x_hat);

// The relative reconstruction bias from its two closed forms:
//   ratio_form    = A / B
//   distance_form = 2A / (A + C - D)
// with A = E||x_hat||^2, B = E[x_hat . x], C = E||x||^2, D = E||x_hat - x||^2.
struct GammaForms {
    double ratio_form = 0.0;
    double distance_form = 0.0;
};

GammaForms reconstruction_bias_forms(const Matrix& x, const Matrix& x_hat);

// Returns the ratio form after checking it against the distance form to 1e-6
// relative. Throws DegenerateInputError when E[x_hat . x] vanishes.
double reconstruction_bias_gamma(const Matrix& x, const Matrix& x_hat);

// 1 - (ce_sae - ce_id) / (ce_zero - ce_id).
double loss_recovered(double ce_sae, double ce_id, double ce_zero);

// A map R^n -> R^n applied row-wise to a batch.
using Substitution = std::function<Matrix(const Matrix&)>;

// Average downstream loss when activations pass through a substitution first.
class DownstreamEvaluator {
public:
    virtual ~DownstreamEvaluator() = default;
    virtual Index input_dim() const = 0;
    virtual double cross_entropy(const Substitution& substitution) const = 0;
};

double downstream_ce(const DownstreamEvaluator& evaluator, const Substitution& substitution);

// Held-out synthetic batch, a fixed linear readout, and softmax cross-entropy.
// Classes are the planted features; the label of a sample is its largest
// coefficient (samples with no active feature are dropped). The readout scores
// class j by sharpness * d_j . (x - x0), so the identity substitution beats the
// zero map whenever features are recoverable.
class SyntheticDownstreamEvaluator final : public DownstreamEvaluator {
public:
    SyntheticDownstreamEvaluator(const SyntheticGroundTruth& gt, Index count, std::uint64_t seed,
                                 double sharpness = 4.0);

    Index input_dim() const override { return inputs_.cols(); }
    double cross_entropy(const Substitution& substitution) const override;

    const Matrix& inputs() const { return inputs_; }

private:
    Matrix inputs_;
    std::vector<Index> labels_;
    Matrix readout_;  // classes x n
    Vector bias_;     // classes
};

struct EvalReport {
    Index width = 0;
    Index sample_count = 0;
    double mean_l0 = 0.0;
    double fve = 0.0;
    double cosine_mean = 0.0;
    std::optional<double> gamma;
    std::optional<double> loss_recovered;
};

nlohmann::json to_json(const EvalReport& report);

// Computes the metric suite of `params` (acting on raw inputs) over `x`. With
// an evaluator, also reports loss recovered.
EvalReport evaluate_sae(const SaeParams& params, const Matrix& x,
                        const DownstreamEvaluator* evaluator = nullptr);

}  // namespace saekit
