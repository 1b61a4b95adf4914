#pragma once

#include <array>
#include <span>

#include "saekit/sae_model.hpp"

namespace saekit {

// Gradient of the SAE loss, shaped like SaeParams.
struct Gradients {
    Matrix g_w_enc;  // M x n
    Vector g_b_enc;  // M
    Matrix g_w_dec;  // n x M
    Vector g_b_dec;  // n
    Vector g_theta;  // M

    static Gradients zeros_like(const SaeParams& params);

    std::array<std::span<double>, 5> blocks();
    std::array<std::span<const double>, 5> blocks() const;

    double squared_norm() const;
    bool all_finite() const;
    Gradients& operator*=(double factor);
};

// Pseudo-derivative kernels. Each integrates to one over the real line.
using Kernel = double (*)(double);

// rect(u) = H(u + 1/2) - H(u - 1/2) with H(0) = 0, i.e. 1 on (-1/2, 1/2].
inline double kernel_rect(double u) { return (u > -0.5 && u <= 0.5) ? 1.0 : 0.0; }

inline double kernel_triangular(double u) {
    const double a = u < 0 ? -u : u;
    return a < 1.0 ? 1.0 - a : 0.0;
}

struct LossAndGradients {
    LossBreakdown loss;
    Gradients grads;
};

// Backpropagation of loss(params, x, lambda_eff, l0_target).
//
// Encoder/decoder weights and biases get exact derivatives with the active set
// held fixed. The thresholds get straight-through pseudo-derivatives:
//   d/dtheta JumpReLU_theta(z) := -(theta/eps) K((z - theta)/eps)
//   d/dtheta H(z - theta)      := -(1/eps)     K((z - theta)/eps)
// The L0 term only reaches theta; the outer quadratic of the sparsity penalty
// is differentiated exactly.
LossAndGradients loss_and_backward(const SaeParams& params, const Matrix& x, double lambda_eff,
                                   double l0_target, double epsilon, Kernel kernel = kernel_rect);

Gradients backward(const SaeParams& params, const Matrix& x, double lambda_eff, double l0_target,
                   double epsilon, Kernel kernel = kernel_rect);

// Central finite differences of loss() for every parameter entry. Only the
// smooth parameters are meaningful pointwise; for theta the loss is piecewise
// constant, so the result is zero unless a step crosses a unit's threshold.
Gradients finite_diff_grad(const SaeParams& params, const Matrix& x, double lambda_eff,
                           double l0_target, double step);

// STE estimate of d/dtheta of lambda * E[H(z - theta)] from samples z:
//   -(lambda / (N eps)) * sum_a K((z_a - theta) / eps)
// which is a kernel density estimate of -lambda * p(theta).
double expected_theta_grad_kde(std::span<const double> preacts, double theta, double epsilon,
                               double lambda, Kernel kernel = kernel_rect);

}  // namespace saekit
