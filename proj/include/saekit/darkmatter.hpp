#pragma once

#include <cstdint>

#include <json.hpp>

#include "saekit/types.hpp"

namespace saekit {

// A linear probe on the augmented input [x; 1].
struct ProbeFit {
    Matrix coefficients;  // (n + 1) x q
    double r2_train = 0.0;
    double r2_test = 0.0;
    double ridge_used = 0.0;

    // Predictions for rows of x (without the bias column).
    Matrix apply(const Matrix& x) const;
};

// x - x_hat.
Matrix sae_error(const Matrix& x, const Matrix& x_hat);

// Seeded shuffle of row indices into a train part of round(train_fraction * B)
// rows and a test part holding the rest.
struct RowSplit {
    std::vector<Index> train;
    std::vector<Index> test;
};

RowSplit split_rows(Index rows, double train_fraction, std::uint64_t seed);

// Least-squares fit of a^T [x; 1] to ||err||^2 per row, on the train part of
// the split; R^2 is reported on both parts.
ProbeFit fit_error_norm_probe(const Matrix& x, const Matrix& err, double train_fraction = 0.8,
                              std::uint64_t seed = 0);

// Least-squares fit of b [x; 1] to the full error vector. r2_* are per-dimension
// R^2 values averaged across dimensions.
ProbeFit fit_error_vector_probe(const Matrix& x, const Matrix& err, double train_fraction = 0.8,
                                std::uint64_t seed = 0);

// 1 - R^2(x, x_hat + probe([x; 1])) with R^2 pooled over all dimensions:
// 1 - sum ||x - x_tilde||^2 / sum ||x - mean(x)||^2.
double fvu_nonlinear(const Matrix& x, const Matrix& x_hat, const ProbeFit& probe);

struct DarkMatterReport {
    double r2_norm_probe = 0.0;
    double r2_vector_probe_mean = 0.0;
    double fvu_nonlinear = 0.0;
    std::uint64_t split_seed = 0;
    double ridge_used = 0.0;
};

nlohmann::json to_json(const DarkMatterReport& report);

// Runs both probes on one split and evaluates FVU_nonlinear on the held-out rows.
DarkMatterReport analyze_dark_matter(const Matrix& x, const Matrix& x_hat, double train_fraction = 0.8,
                                     std::uint64_t seed = 0);

}  // namespace saekit
