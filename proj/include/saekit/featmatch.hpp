#pragma once

#include <vector>

#include <json.hpp>

#include "saekit/sae_model.hpp"

namespace saekit {

// assignment[r] is the column matched to row r.
using Assignment = std::vector<Index>;

// Minimum-cost assignment of every row of an R x C cost matrix (R <= C) to a
// distinct column (Kuhn-Munkres with potentials, O(R^2 C)). Ties resolve to the
// lowest column index.
Assignment hungarian(const Matrix& cost);

double assignment_cost(const Matrix& cost, const Assignment& assignment);

// Cosine similarity between every column of a and every column of b.
Matrix column_cosines(const Matrix& a, const Matrix& b);

struct MatchResult {
    // Decoder-space match (or the only match for match_dictionaries).
    Assignment assignment;
    Vector similarities;
    double mean_similarity = 0.0;
    // Filled by encoder_decoder_consistency only.
    Assignment encoder_assignment;
    Vector encoder_similarities;
    Index consistent_count = 0;
};

nlohmann::json to_json(const MatchResult& result);

// CSV with columns feature_index, decoder_sim, encoder_sim, consistent.
std::string scatter_csv(const MatchResult& result);

// Matches the columns of a (n x M_a) to those of b (n x M_b), M_a <= M_b, by
// minimizing sum (1 - cosine).
MatchResult match_dictionaries(const Matrix& a, const Matrix& b);

// Independently matches decoder columns and encoder rows of two SAEs and counts
// the features of `a` whose two matches agree.
MatchResult encoder_decoder_consistency(const SaeParams& a, const SaeParams& b);

struct CosineHistogram {
    std::vector<double> edges;  // bins + 1 edges spanning [-1, 1]
    std::vector<Index> counts;
    std::vector<double> maxima;  // per column of a
};

std::string to_csv(const CosineHistogram& histogram);

// For each column of a, the largest cosine with any column of b, binned over
// [-1, 1]; the value 1 lands in the top bin.
CosineHistogram max_cosine_histogram(const Matrix& a, const Matrix& b, Index bins);

}  // namespace saekit
