#pragma once

#include <array>
#include <span>

#include "saekit/types.hpp"

namespace saekit {

// JumpReLU sparse autoencoder parameters.
//
//   pre(x) = W_enc x + b_enc
//   f(x)   = pre(x) * H(pre(x) - theta)      (H(0) = 0)
//   x_hat  = W_dec f + b_dec
//
// The columns of w_dec are the dictionary directions.
struct SaeParams {
    Matrix w_enc;  // M x n
    Vector b_enc;  // M
    Matrix w_dec;  // n x M
    Vector b_dec;  // n
    Vector theta;  // M, strictly positive

    Index input_dim() const { return w_dec.rows(); }
    Index dict_size() const { return w_dec.cols(); }

    // Throws ConfigError on inconsistent shapes, non-positive thresholds, or
    // non-finite entries.
    void validate() const;

    static SaeParams zeros(Index input_dim, Index dict_size);

    // Flat views of w_enc, b_enc, w_dec, b_dec, theta, in that order.
    std::array<std::span<double>, 5> blocks();
    std::array<std::span<const double>, 5> blocks() const;
};

struct LossBreakdown {
    double reconstruction = 0.0;  // mean over the batch of ||x - x_hat||^2
    double sparsity = 0.0;        // lambda_eff * (mean_l0 / l0_target - 1)^2
    double total = 0.0;
    double mean_l0 = 0.0;
};

Matrix preactivations(const SaeParams& params, const Matrix& x);

// Heaviside with H(0) = 0: a unit fires only when z strictly exceeds theta.
inline double jumprelu(double z, double theta) { return z > theta ? z : 0.0; }

Matrix encode(const SaeParams& params, const Matrix& x);
Matrix decode(const SaeParams& params, const Matrix& codes);

// encode followed by decode.
Matrix reconstruct(const SaeParams& params, const Matrix& x);

LossBreakdown loss(const SaeParams& params, const Matrix& x, double lambda_eff, double l0_target);

// Converts parameters trained on inputs divided by `s` into parameters that
// act on raw inputs: codes are unchanged and reconstructions scale by `s`.
SaeParams rescale_for_raw_inputs(const SaeParams& params, double s);

}  // namespace saekit
