#include <doctest.h>

#include "oracles.hpp"
#include "saekit/errors.hpp"
#include "saekit/numerics.hpp"

using namespace saekit;

TEST_CASE("consistent square system has zero residual") {
    Matrix a(3, 3);
    a << 2, 1, 0, 1, 3, 1, 0, 1, 4;
    Matrix w(3, 1);
    w << 1, -2, 0.5;
    const LeastSquaresSolution s = least_squares_fit(a, a * w, 0.0);
    CHECK(s.residual_sum_squares < 1e-9);
    CHECK((s.coefficients - w).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_FALSE(s.condition_warning);
}

TEST_CASE("planted coefficient on the first column") {
    Rng rng(1);
    const Matrix a = oracle::random_matrix(40, 5, rng);
    const Matrix t = 2.0 * a.col(0);
    const LeastSquaresSolution s = least_squares_fit(a, t, 0.0);
    CHECK(std::abs(s.coefficients(0, 0) - 2.0) < 1e-9);
    CHECK(s.coefficients.bottomRows(4).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("residual is orthogonal to the column space") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = oracle::random_matrix(60, 8, rng);
        const Matrix t = oracle::random_matrix(60, 3, rng);
        const LeastSquaresSolution s = least_squares_fit(a, t, 0.0);
        const Matrix resid = t - a * s.coefficients;
        const double scale = a.norm() * t.norm();
        CHECK((a.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8 * scale);
        CHECK(std::abs(s.residual_sum_squares - resid.squaredNorm()) < 1e-9 * t.squaredNorm());
    }
}

TEST_CASE("ridge solution matches the regularized normal equations") {
    Rng rng(3);
    const Matrix a = oracle::random_matrix(30, 6, rng);
    const Matrix t = oracle::random_matrix(30, 2, rng);
    const double ridge = 0.7;
    // Gaussian elimination on (A^T A + r I) W = A^T t, written out directly.
    Matrix g = oracle::naive_matmul(a.transpose(), a);
    for (Index i = 0; i < 6; ++i) g(i, i) += ridge;
    Matrix rhs = oracle::naive_matmul(a.transpose(), t);
    for (Index k = 0; k < 6; ++k) {
        for (Index i = k + 1; i < 6; ++i) {
            const double f = g(i, k) / g(k, k);
            g.row(i) -= f * g.row(k);
            rhs.row(i) -= f * rhs.row(k);
        }
    }
    Matrix w(6, 2);
    for (Index i = 5; i >= 0; --i) {
        for (Index c = 0; c < 2; ++c) {
            double v = rhs(i, c);
            for (Index j = i + 1; j < 6; ++j) v -= g(i, j) * w(j, c);
            w(i, c) = v / g(i, i);
        }
    }
    const LeastSquaresSolution s = least_squares_fit(a, t, ridge);
    CHECK((s.coefficients - w).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("coefficients shrink monotonically as ridge grows") {
    Rng rng(4);
    const Matrix a = oracle::random_matrix(25, 4, rng);
    const Matrix t = oracle::random_matrix(25, 1, rng);
    double previous = least_squares_fit(a, t, 0.0).coefficients.norm();
    for (double r : {1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6}) {
        const double now = least_squares_fit(a, t, r).coefficients.norm();
        CHECK(now < previous);
        previous = now;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("rank deficiency sets the warning and returns the minimum-norm solution") {
    Rng rng(5);
    Matrix a(20, 3);
    a.leftCols(2) = oracle::random_matrix(20, 2, rng);
    a.col(2) = a.col(0);
    const Matrix t = 3.0 * a.col(0);
    const LeastSquaresSolution s = least_squares_fit(a, t, 0.0);
    CHECK(s.condition_warning);
    // Any split c0 + c2 = 3 fits; the minimum-norm one is 1.5 / 1.5.
    CHECK(std::abs(s.coefficients(0, 0) - 1.5) < 1e-9);
    CHECK(std::abs(s.coefficients(2, 0) - 1.5) < 1e-9);
    CHECK(std::abs(s.coefficients(1, 0)) < 1e-9);
}

TEST_CASE("least squares input errors") {
    CHECK_THROWS_AS(least_squares_fit(Matrix::Ones(3, 2), Matrix::Ones(4, 1), 0.0), ConfigError);
    CHECK_THROWS_AS(least_squares_fit(Matrix::Ones(3, 2), Matrix::Ones(3, 1), -1.0), ConfigError);
    CHECK_THROWS_AS(least_squares_fit(Matrix(0, 2), Matrix(0, 1), 0.0), ConfigError);
}

TEST_CASE("r_squared definitions") {
    const std::vector<double> t{1.0, 2.0, 4.0, 7.0};
    CHECK(r_squared(t, t) == doctest::Approx(1.0));
    const std::vector<double> mean(4, 3.5);
    CHECK(r_squared(t, mean) == doctest::Approx(0.0));
    const std::vector<double> anti{7.0, 4.0, 2.0, 1.0};
    CHECK(r_squared(t, anti) < 0.0);
    const std::vector<double> flat(4, 2.0);
    CHECK(r_squared(flat, t) == 0.0);
}

TEST_CASE("r_squared is invariant under a shared affine map") {
    Rng rng(6);
    std::vector<double> t(50), p(50), t2(50), p2(50);
    for (std::size_t i = 0; i < 50; ++i) {
        t[i] = standard_normal(rng);
        p[i] = t[i] + 0.5 * standard_normal(rng);
        t2[i] = -3.0 * t[i] + 11.0;
        p2[i] = -3.0 * p[i] + 11.0;
    }
    CHECK(std::abs(r_squared(t, p) - r_squared(t2, p2)) < 1e-12);
}

TEST_CASE("r_squared_columns and bias column") {
    Matrix t(3, 2);
    t << 1, 5, 2, 5, 3, 5;
    const Vector r = r_squared_columns(t, t);
    CHECK(r(0) == doctest::Approx(1.0));
    CHECK(r(1) == 0.0);
    const Matrix aug = with_bias_column(t);
    CHECK(aug.cols() == 3);
    CHECK(aug.col(2) == Vector::Ones(3));
    CHECK(aug.leftCols(2) == t);
}
