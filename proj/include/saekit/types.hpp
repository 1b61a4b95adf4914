#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace saekit {

using Index = Eigen::Index;
// Row-major so that one activation vector is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A B x n block of activation vectors, one per row.
struct ActivationBatch {
    Matrix rows;
    std::string source_tag;
    bool normalized = false;
    // Global index of each row within its source; empty when unknown.
    std::vector<std::uint64_t> row_ids;

    Index size() const { return rows.rows(); }
    Index dim() const { return rows.cols(); }
};

}  // namespace saekit
