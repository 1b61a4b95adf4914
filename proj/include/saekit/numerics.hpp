#pragma once

#include <span>

#include "saekit/types.hpp"

namespace saekit {

struct LeastSquaresSolution {
    Matrix coefficients;  // p x q
    double residual_sum_squares = 0.0;
    // Set when ridge == 0 and the design is rank deficient; the returned
    // coefficients are then the minimum-norm solution.
    bool condition_warning = false;
};

// Minimizes ||design * W - targets||^2 + ridge * ||W||^2 using orthogonal
// factorizations (no explicit normal-equation inverse).
LeastSquaresSolution least_squares_fit(const Matrix& design, const Matrix& targets, double ridge);

// 1 - sum (t - p)^2 / sum (t - mean t)^2. Zero-variance targets give 0.
double r_squared(std::span<const double> targets, std::span<const double> predictions);

// Column-wise r_squared between two equally shaped matrices.
Vector r_squared_columns(const Matrix& targets, const Matrix& predictions);

// Appends a constant-one column: [x; 1] per row.
Matrix with_bias_column(const Matrix& x);

}  // namespace saekit
