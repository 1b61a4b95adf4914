#include "saekit/darkmatter.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "saekit/errors.hpp"
#include "saekit/numerics.hpp"
#include "saekit/rng.hpp"

namespace saekit {

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
    return out;
}

struct LinearFit {
    Matrix coefficients;
    double ridge_used = 0.0;
};

// Plain least squares; on a rank-deficient design, falls back to a ridge of
// 1e-6 times the mean diagonal of design^T design.
LinearFit fit_with_fallback(const Matrix& design, const Matrix& targets) {
    LeastSquaresSolution sol = least_squares_fit(design, targets, 0.0);
    if (!sol.condition_warning) return {std::move(sol.coefficients), 0.0};
    const double ridge = 1e-6 * design.squaredNorm() / static_cast<double>(design.cols());
    sol = least_squares_fit(design, targets, ridge);
    return {std::move(sol.coefficients), ridge};
}

void check_probe_inputs(const Matrix& x, const Matrix& err, const RowSplit& split) {
    if (x.rows() != err.rows()) throw ConfigError("probe: x and err row counts differ");
    if (static_cast<Index>(split.train.size()) < x.cols() + 2) {
        throw ConfigError("probe needs at least n + 2 = " + std::to_string(x.cols() + 2) + " training rows, got " +
                          std::to_string(split.train.size()));
    }
    if (split.test.size() < 2) throw ConfigError("probe needs at least two held-out rows");
}

double mean_r2(const Matrix& targets, const Matrix& predictions) {
    return r_squared_columns(targets, predictions).mean();
}

ProbeFit fit_probe(const Matrix& x, const Matrix& targets, double train_fraction, std::uint64_t seed) {
    const RowSplit split = split_rows(x.rows(), train_fraction, seed);
    check_probe_inputs(x, targets, split);
    const Matrix x_train = take_rows(x, split.train);
    const Matrix t_train = take_rows(targets, split.train);
    const Matrix x_test = take_rows(x, split.test);
    const Matrix t_test = take_rows(targets, split.test);

    LinearFit fit = fit_with_fallback(with_bias_column(x_train), t_train);
    ProbeFit probe;
    probe.coefficients = std::move(fit.coefficients);
    probe.ridge_used = fit.ridge_used;
    probe.r2_train = mean_r2(t_train, probe.apply(x_train));
    probe.r2_test = mean_r2(t_test, probe.apply(x_test));
    return probe;
}

}  // namespace

Matrix ProbeFit::apply(const Matrix& x) const {
    if (x.cols() + 1 != coefficients.rows()) throw ConfigError("probe input width mismatch");
    return with_bias_column(x) * coefficients;
}

Matrix sae_error(const Matrix& x, const Matrix& x_hat) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw ConfigError("sae_error: shape mismatch");
    return x - x_hat;
}

RowSplit split_rows(Index rows, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
    std::vector<Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(seed, "darkmatter/split");
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows)));
    RowSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return split;
}

ProbeFit fit_error_norm_probe(const Matrix& x, const Matrix& err, double train_fraction, std::uint64_t seed) {
    if (x.rows() != err.rows()) throw ConfigError("probe: x and err row counts differ");
    const Matrix target = err.rowwise().squaredNorm();
    return fit_probe(x, target, train_fraction, seed);
}

ProbeFit fit_error_vector_probe(const Matrix& x, const Matrix& err, double train_fraction, std::uint64_t seed) {
    return fit_probe(x, err, train_fraction, seed);
}

double fvu_nonlinear(const Matrix& x, const Matrix& x_hat, const ProbeFit& probe) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw ConfigError("fvu_nonlinear: shape mismatch");
    if (probe.coefficients.cols() != x.cols()) throw ConfigError("fvu_nonlinear needs a vector probe of width n");
    const Matrix x_tilde = x_hat + probe.apply(x);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double ss_tot = (x.rowwise() - mean).squaredNorm();
    if (!(ss_tot > 0.0)) throw DegenerateInputError("fvu_nonlinear: input has zero variance");
    const double r2 = 1.0 - (x - x_tilde).squaredNorm() / ss_tot;
    return 1.0 - r2;
}

nlohmann::json to_json(const DarkMatterReport& r) {
    return {{"r2_norm_probe", r.r2_norm_probe},
            {"r2_vector_probe_mean", r.r2_vector_probe_mean},
            {"fvu_nonlinear", r.fvu_nonlinear},
            {"split_seed", r.split_seed},
            {"ridge_used", r.ridge_used}};
}

DarkMatterReport analyze_dark_matter(const Matrix& x, const Matrix& x_hat, double train_fraction,
                                     std::uint64_t seed) {
    const Matrix err = sae_error(x, x_hat);
    const ProbeFit norm_probe = fit_error_norm_probe(x, err, train_fraction, seed);
    const ProbeFit vector_probe = fit_error_vector_probe(x, err, train_fraction, seed);
    const RowSplit split = split_rows(x.rows(), train_fraction, seed);

    DarkMatterReport report;
    report.r2_norm_probe = norm_probe.r2_test;
    report.r2_vector_probe_mean = vector_probe.r2_test;
    report.fvu_nonlinear = fvu_nonlinear(take_rows(x, split.test), take_rows(x_hat, split.test), vector_probe);
    report.split_seed = seed;
    report.ridge_used = std::max(norm_probe.ridge_used, vector_probe.ridge_used);
    return report;
}

}  // namespace saekit
