#include "saekit/grad.hpp"

#include <cmath>

#include "saekit/errors.hpp"

namespace saekit {

namespace {

template <class M>
std::span<double> flat(M& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

Gradients Gradients::zeros_like(const SaeParams& params) {
    Gradients g;
    g.g_w_enc = Matrix::Zero(params.w_enc.rows(), params.w_enc.cols());
    g.g_b_enc = Vector::Zero(params.b_enc.size());
    g.g_w_dec = Matrix::Zero(params.w_dec.rows(), params.w_dec.cols());
    g.g_b_dec = Vector::Zero(params.b_dec.size());
    g.g_theta = Vector::Zero(params.theta.size());
    return g;
}

std::array<std::span<double>, 5> Gradients::blocks() {
    return {flat(g_w_enc), flat(g_b_enc), flat(g_w_dec), flat(g_b_dec), flat(g_theta)};
}

std::array<std::span<const double>, 5> Gradients::blocks() const {
    auto b = const_cast<Gradients*>(this)->blocks();
    return {b[0], b[1], b[2], b[3], b[4]};
}

double Gradients::squared_norm() const {
    return g_w_enc.squaredNorm() + g_b_enc.squaredNorm() + g_w_dec.squaredNorm() +
           g_b_dec.squaredNorm() + g_theta.squaredNorm();
}

bool Gradients::all_finite() const {
    return g_w_enc.allFinite() && g_b_enc.allFinite() && g_w_dec.allFinite() &&
           g_b_dec.allFinite() && g_theta.allFinite();
}

Gradients& Gradients::operator*=(double factor) {
    g_w_enc *= factor;
    g_b_enc *= factor;
    g_w_dec *= factor;
    g_b_dec *= factor;
    g_theta *= factor;
    return *this;
}

LossAndGradients loss_and_backward(const SaeParams& params, const Matrix& x, double lambda_eff,
                                   double l0_target, double epsilon, Kernel kernel) {
    if (!(epsilon > 0.0)) throw ConfigError("bandwidth epsilon must be > 0");
    if (l0_target <= 0.0) throw ConfigError("l0_target must be > 0");
    if (lambda_eff < 0.0) throw ConfigError("lambda_eff must be >= 0");
    if (x.rows() < 1) throw ConfigError("empty batch");

    const Index batch = x.rows();
    const Index width = params.dict_size();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    const Matrix pre = preactivations(params, x);
    Matrix codes(batch, width);
    Index active = 0;
    for (Index r = 0; r < batch; ++r) {
        for (Index i = 0; i < width; ++i) {
            const double z = pre(r, i);
            const bool on = z > params.theta(i);
            codes(r, i) = on ? z : 0.0;
            active += on;
        }
    }
    Matrix resid = x - decode(params, codes);

    LossAndGradients out;
    LossBreakdown& lb = out.loss;
    lb.reconstruction = resid.squaredNorm() * inv_batch;
    lb.mean_l0 = static_cast<double>(active) * inv_batch;
    const double ratio_gap = lb.mean_l0 / l0_target - 1.0;
    lb.sparsity = lambda_eff * ratio_gap * ratio_gap;
    lb.total = lb.reconstruction + lb.sparsity;

    // dL/dx_hat = -2 (x - x_hat) / B
    resid *= -2.0 * inv_batch;
    const Matrix& d_xhat = resid;

    Gradients& g = out.grads;
    g.g_w_dec.noalias() = d_xhat.transpose() * codes;
    g.g_b_dec = d_xhat.colwise().sum().transpose();

    Matrix d_codes = d_xhat * params.w_dec;  // B x M
    // dL_sparsity / d(mean_l0), scaled to a per-sample contribution.
    const double l0_coeff = lambda_eff * 2.0 * ratio_gap / l0_target * inv_batch;
    g.g_theta = Vector::Zero(width);
    for (Index r = 0; r < batch; ++r) {
        for (Index i = 0; i < width; ++i) {
            const double theta = params.theta(i);
            const double z = pre(r, i);
            const double k = kernel((z - theta) / epsilon);
            if (k != 0.0) {
                g.g_theta(i) += (d_codes(r, i) * theta + l0_coeff) * (-k / epsilon);
            }
            if (!(z > theta)) d_codes(r, i) = 0.0;  // d_codes becomes dL/dpre
        }
    }
    g.g_w_enc.noalias() = d_codes.transpose() * x;
    g.g_b_enc = d_codes.colwise().sum().transpose();

    if (!std::isfinite(lb.total) || !g.all_finite()) {
        throw NumericError("non-finite loss or gradient in backward pass");
    }
    return out;
}

Gradients backward(const SaeParams& params, const Matrix& x, double lambda_eff, double l0_target,
                   double epsilon, Kernel kernel) {
    return loss_and_backward(params, x, lambda_eff, l0_target, epsilon, kernel).grads;
}

Gradients finite_diff_grad(const SaeParams& params, const Matrix& x, double lambda_eff,
                           double l0_target, double step) {
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be > 0");
    Gradients g = Gradients::zeros_like(params);
    SaeParams probe = params;
    auto probe_blocks = probe.blocks();
    auto grad_blocks = g.blocks();
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        for (std::size_t k = 0; k < probe_blocks[b].size(); ++k) {
            double& entry = probe_blocks[b][k];
            const double saved = entry;
            entry = saved + step;
            const double up = loss(probe, x, lambda_eff, l0_target).total;
            entry = saved - step;
            const double down = loss(probe, x, lambda_eff, l0_target).total;
            entry = saved;
            grad_blocks[b][k] = (up - down) / (2.0 * step);
        }
    }
    return g;
}

double expected_theta_grad_kde(std::span<const double> preacts, double theta, double epsilon,
                               double lambda, Kernel kernel) {
    if (preacts.empty()) throw ConfigError("need at least one sample");
    if (!(epsilon > 0.0)) throw ConfigError("bandwidth epsilon must be > 0");
    double mass = 0.0;
    for (double z : preacts) mass += kernel((z - theta) / epsilon);
    return -lambda * mass / (static_cast<double>(preacts.size()) * epsilon);
}

}  // namespace saekit
