#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "saekit/rng.hpp"
#include "saekit/sae_model.hpp"

namespace oracle {

using saekit::Index;
using saekit::Matrix;
using saekit::Vector;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

// Minimum total cost over all injective row->column maps (rows <= cols).
inline double brute_force_assignment_cost(const Matrix& cost) {
    std::vector<Index> cols(static_cast<std::size_t>(cost.cols()));
    std::iota(cols.begin(), cols.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (Index r = 0; r < cost.rows(); ++r) total += cost(r, cols[static_cast<std::size_t>(r)]);
        best = std::min(best, total);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

// Sum over columns of the 1/B variance, two-pass per column.
inline double two_pass_total_variance(const Matrix& m) {
    double total = 0.0;
    for (Index j = 0; j < m.cols(); ++j) {
        double mean = 0.0;
        for (Index i = 0; i < m.rows(); ++i) mean += m(i, j);
        mean /= static_cast<double>(m.rows());
        double ss = 0.0;
        for (Index i = 0; i < m.rows(); ++i) ss += (m(i, j) - mean) * (m(i, j) - mean);
        total += ss / static_cast<double>(m.rows());
    }
    return total;
}

inline Matrix random_matrix(Index rows, Index cols, saekit::Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * saekit::standard_normal(rng);
    return m;
}

inline Vector random_vector(Index size, saekit::Rng& rng, double scale = 1.0) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = scale * saekit::standard_normal(rng);
    return v;
}

inline saekit::SaeParams random_params(Index n, Index m, saekit::Rng& rng) {
    saekit::SaeParams p;
    p.w_enc = random_matrix(m, n, rng, 1.0 / std::sqrt(static_cast<double>(n)));
    p.b_enc = random_vector(m, rng, 0.1);
    p.w_dec = random_matrix(n, m, rng, 1.0 / std::sqrt(static_cast<double>(n)));
    p.b_dec = random_vector(n, rng, 0.1);
    p.theta = Vector(m);
    for (Index i = 0; i < m; ++i) p.theta(i) = 0.05 + 0.3 * saekit::uniform01(rng);
    return p;
}

// Relative closeness with an absolute floor for entries that are exactly zero.
inline bool close(double a, double b, double rel, double abs_floor = 1e-9) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace oracle

namespace oracle {

// Random SAE and batch where every pre-activation sits more than `margin` away
// from its threshold; offending rows are redrawn.
struct MarginInstance {
    saekit::SaeParams params;
    Matrix x;
};

inline MarginInstance margin_instance(Index n, Index m, Index batch, double margin, saekit::Rng& rng) {
    MarginInstance inst{random_params(n, m, rng), Matrix(batch, n)};
    for (Index r = 0; r < batch; ++r) {
        for (;;) {
            Vector row = random_vector(n, rng);
            const Vector pre = inst.params.w_enc * row + inst.params.b_enc;
            if (((pre - inst.params.theta).cwiseAbs().array() > margin).all()) {
                inst.x.row(r) = row.transpose();
                break;
            }
        }
    }
    return inst;
}

}  // namespace oracle
