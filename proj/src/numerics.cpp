#include "saekit/numerics.hpp"

#include <cmath>

#include "saekit/errors.hpp"

namespace saekit {

LeastSquaresSolution least_squares_fit(const Matrix& design, const Matrix& targets, double ridge) {
    if (design.rows() < 1) throw ConfigError("least squares needs at least one row");
    if (design.rows() != targets.rows()) throw ConfigError("design and targets row counts differ");
    if (ridge < 0.0) throw ConfigError("ridge must be >= 0");

    using ColMajor = Eigen::MatrixXd;
    const Index p = design.cols();
    LeastSquaresSolution out;

    if (ridge == 0.0) {
        Eigen::CompleteOrthogonalDecomposition<ColMajor> cod{ColMajor(design)};
        out.coefficients = cod.solve(ColMajor(targets));
        out.condition_warning = cod.rank() < p;
    } else {
        // Ridge as an augmented least-squares problem [A; sqrt(r) I] W = [T; 0].
        ColMajor aug(design.rows() + p, p);
        aug.topRows(design.rows()) = design;
        aug.bottomRows(p) = std::sqrt(ridge) * ColMajor::Identity(p, p);
        ColMajor rhs = ColMajor::Zero(design.rows() + p, targets.cols());
        rhs.topRows(design.rows()) = targets;
        out.coefficients = aug.colPivHouseholderQr().solve(rhs);
    }
    out.residual_sum_squares = (design * out.coefficients - targets).squaredNorm();
    return out;
}

double r_squared(std::span<const double> targets, std::span<const double> predictions) {
    if (targets.size() != predictions.size()) throw ConfigError("r_squared: length mismatch");
    if (targets.size() < 2) throw ConfigError("r_squared needs at least two samples");
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
        ss_res += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
    }
    if (ss_tot == 0.0) return 0.0;
    return 1.0 - ss_res / ss_tot;
}

Vector r_squared_columns(const Matrix& targets, const Matrix& predictions) {
    if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols()) {
        throw ConfigError("r_squared_columns: shape mismatch");
    }
    Vector out(targets.cols());
    for (Index j = 0; j < targets.cols(); ++j) {
        const Eigen::VectorXd t = targets.col(j);
        const Eigen::VectorXd p = predictions.col(j);
        out(j) = r_squared({t.data(), static_cast<std::size_t>(t.size())},
                           {p.data(), static_cast<std::size_t>(p.size())});
    }
    return out;
}

Matrix with_bias_column(const Matrix& x) {
    Matrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = x;
    out.col(x.cols()).setOnes();
    return out;
}

}  // namespace saekit
