#include "saekit/sae_model.hpp"

#include <string>

#include "saekit/errors.hpp"

namespace saekit {

namespace {

void require_input_width(const SaeParams& params, const Matrix& x) {
    if (x.cols() != params.input_dim()) {
        throw ConfigError("input has " + std::to_string(x.cols()) + " columns, SAE expects " +
                          std::to_string(params.input_dim()));
    }
}

}  // namespace

void SaeParams::validate() const {
    const Index n = w_dec.rows();
    const Index m = w_dec.cols();
    if (n < 1 || m < 1) throw ConfigError("SAE needs n >= 1 and M >= 1");
    if (w_enc.rows() != m || w_enc.cols() != n) throw ConfigError("w_enc must be M x n");
    if (b_enc.size() != m) throw ConfigError("b_enc must have M entries");
    if (b_dec.size() != n) throw ConfigError("b_dec must have n entries");
    if (theta.size() != m) throw ConfigError("theta must have M entries");
    if (!w_enc.allFinite() || !b_enc.allFinite() || !w_dec.allFinite() || !b_dec.allFinite() ||
        !theta.allFinite()) {
        throw ConfigError("SAE parameters contain non-finite entries");
    }
    if ((theta.array() <= 0.0).any()) throw ConfigError("every threshold must be > 0");
}

SaeParams SaeParams::zeros(Index input_dim, Index dict_size) {
    SaeParams p;
    p.w_enc = Matrix::Zero(dict_size, input_dim);
    p.b_enc = Vector::Zero(dict_size);
    p.w_dec = Matrix::Zero(input_dim, dict_size);
    p.b_dec = Vector::Zero(input_dim);
    p.theta = Vector::Constant(dict_size, 1e-3);
    return p;
}

std::array<std::span<double>, 5> SaeParams::blocks() {
    return {std::span<double>(w_enc.data(), static_cast<std::size_t>(w_enc.size())),
            std::span<double>(b_enc.data(), static_cast<std::size_t>(b_enc.size())),
            std::span<double>(w_dec.data(), static_cast<std::size_t>(w_dec.size())),
            std::span<double>(b_dec.data(), static_cast<std::size_t>(b_dec.size())),
            std::span<double>(theta.data(), static_cast<std::size_t>(theta.size()))};
}

std::array<std::span<const double>, 5> SaeParams::blocks() const {
    auto b = const_cast<SaeParams*>(this)->blocks();
    return {b[0], b[1], b[2], b[3], b[4]};
}

Matrix preactivations(const SaeParams& params, const Matrix& x) {
    require_input_width(params, x);
    Matrix pre = x * params.w_enc.transpose();
    pre.rowwise() += params.b_enc.transpose();
    return pre;
}

Matrix encode(const SaeParams& params, const Matrix& x) {
    Matrix f = preactivations(params, x);
    for (Index r = 0; r < f.rows(); ++r) {
        for (Index i = 0; i < f.cols(); ++i) f(r, i) = jumprelu(f(r, i), params.theta(i));
    }
    return f;
}

Matrix decode(const SaeParams& params, const Matrix& codes) {
    if (codes.cols() != params.dict_size()) {
        throw ConfigError("codes have " + std::to_string(codes.cols()) + " columns, SAE has " +
                          std::to_string(params.dict_size()) + " features");
    }
    Matrix x_hat = codes * params.w_dec.transpose();
    x_hat.rowwise() += params.b_dec.transpose();
    return x_hat;
}

Matrix reconstruct(const SaeParams& params, const Matrix& x) {
    return decode(params, encode(params, x));
}

LossBreakdown loss(const SaeParams& params, const Matrix& x, double lambda_eff, double l0_target) {
    if (l0_target <= 0.0) throw ConfigError("l0_target must be > 0");
    if (lambda_eff < 0.0) throw ConfigError("lambda_eff must be >= 0");
    if (x.rows() < 1) throw ConfigError("empty batch");

    const Matrix f = encode(params, x);
    const Matrix x_hat = decode(params, f);
    const double batch = static_cast<double>(x.rows());

    LossBreakdown out;
    out.reconstruction = (x - x_hat).squaredNorm() / batch;
    out.mean_l0 = static_cast<double>((f.array() != 0.0).count()) / batch;
    const double ratio_gap = out.mean_l0 / l0_target - 1.0;
    out.sparsity = lambda_eff * ratio_gap * ratio_gap;
    out.total = out.reconstruction + out.sparsity;
    return out;
}

SaeParams rescale_for_raw_inputs(const SaeParams& params, double s) {
    if (!(s > 0.0)) throw ConfigError("normalization factor must be > 0");
    SaeParams out = params;
    out.w_enc /= s;
    out.w_dec *= s;
    out.b_dec *= s;
    return out;
}

}  // namespace saekit
