#include "saekit/featmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "saekit/errors.hpp"

namespace saekit {

Assignment hungarian(const Matrix& cost) {
    const Index rows = cost.rows();
    const Index cols = cost.cols();
    if (rows > cols) throw ConfigError("hungarian needs rows <= cols");
    if (!cost.allFinite()) throw ConfigError("hungarian: cost matrix has non-finite entries");
    if (rows == 0) return {};

    // 1-based potentials formulation; column 0 is a virtual start column.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(rows + 1), 0.0);
    std::vector<double> v(static_cast<std::size_t>(cols + 1), 0.0);
    std::vector<Index> owner(static_cast<std::size_t>(cols + 1), 0);  // row matched to column
    std::vector<Index> way(static_cast<std::size_t>(cols + 1), 0);
    std::vector<double> min_slack(static_cast<std::size_t>(cols + 1));
    std::vector<char> used(static_cast<std::size_t>(cols + 1));

    for (Index i = 1; i <= rows; ++i) {
        owner[0] = i;
        Index j0 = 0;
        std::fill(min_slack.begin(), min_slack.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Index i0 = owner[static_cast<std::size_t>(j0)];
            double delta = kInf;
            Index j1 = 0;
            for (Index j = 1; j <= cols; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (used[ju]) continue;
                const double slack = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[ju];
                if (slack < min_slack[ju]) {
                    min_slack[ju] = slack;
                    way[ju] = j0;
                }
                if (min_slack[ju] < delta) {
                    delta = min_slack[ju];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= cols; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (used[ju]) {
                    u[static_cast<std::size_t>(owner[ju])] += delta;
                    v[ju] -= delta;
                } else {
                    min_slack[ju] -= delta;
                }
            }
            j0 = j1;
        } while (owner[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            owner[static_cast<std::size_t>(j0)] = owner[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out(static_cast<std::size_t>(rows), -1);
    for (Index j = 1; j <= cols; ++j) {
        const Index i = owner[static_cast<std::size_t>(j)];
        if (i != 0) out[static_cast<std::size_t>(i - 1)] = j - 1;
    }
    return out;
}

double assignment_cost(const Matrix& cost, const Assignment& assignment) {
    double total = 0.0;
    for (std::size_t r = 0; r < assignment.size(); ++r) total += cost(static_cast<Index>(r), assignment[r]);
    return total;
}

namespace {

Matrix unit_columns(const Matrix& m, const char* name) {
    Matrix out = m;
    for (Index j = 0; j < m.cols(); ++j) {
        const double norm = m.col(j).norm();
        if (norm == 0.0) throw ConfigError(std::string(name) + " column " + std::to_string(j) + " has zero norm");
        out.col(j) /= norm;
    }
    return out;
}

MatchResult match_from_cosines(const Matrix& cosines) {
    if (cosines.rows() > cosines.cols()) {
        throw ConfigError("match needs M_a <= M_b (got " + std::to_string(cosines.rows()) + " > " +
                          std::to_string(cosines.cols()) + ")");
    }
    MatchResult result;
    const Matrix cost = (1.0 - cosines.array()).matrix();
    result.assignment = hungarian(cost);
    result.similarities.resize(cosines.rows());
    for (Index r = 0; r < cosines.rows(); ++r) {
        result.similarities(r) = cosines(r, result.assignment[static_cast<std::size_t>(r)]);
    }
    result.mean_similarity = cosines.rows() > 0 ? result.similarities.mean() : 0.0;
    return result;
}

}  // namespace

Matrix column_cosines(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ConfigError("dictionaries have different input dimensions");
    return (unit_columns(a, "a").transpose() * unit_columns(b, "b")).cwiseMax(-1.0).cwiseMin(1.0);
}

MatchResult match_dictionaries(const Matrix& a, const Matrix& b) { return match_from_cosines(column_cosines(a, b)); }

MatchResult encoder_decoder_consistency(const SaeParams& a, const SaeParams& b) {
    if (a.input_dim() != b.input_dim()) throw ConfigError("SAEs have different input dimensions");
    MatchResult dec = match_dictionaries(a.w_dec, b.w_dec);
    const MatchResult enc = match_dictionaries(a.w_enc.transpose(), b.w_enc.transpose());
    dec.encoder_assignment = enc.assignment;
    dec.encoder_similarities = enc.similarities;
    dec.consistent_count = 0;
    for (std::size_t i = 0; i < dec.assignment.size(); ++i) {
        dec.consistent_count += dec.assignment[i] == enc.assignment[i];
    }
    return dec;
}

nlohmann::json to_json(const MatchResult& r) {
    nlohmann::json j = {{"assignment", r.assignment},
                        {"similarities", std::vector<double>(r.similarities.data(),
                                                             r.similarities.data() + r.similarities.size())},
                        {"mean_similarity", r.mean_similarity}};
    if (!r.encoder_assignment.empty()) {
        j["encoder_assignment"] = r.encoder_assignment;
        j["encoder_similarities"] = std::vector<double>(r.encoder_similarities.data(),
                                                        r.encoder_similarities.data() + r.encoder_similarities.size());
        j["consistent_count"] = r.consistent_count;
    }
    return j;
}

std::string scatter_csv(const MatchResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "feature_index,decoder_sim,encoder_sim,consistent\n";
    const bool has_enc = !r.encoder_assignment.empty();
    for (std::size_t i = 0; i < r.assignment.size(); ++i) {
        const auto ii = static_cast<Index>(i);
        os << i << ',' << r.similarities(ii) << ',';
        if (has_enc) os << r.encoder_similarities(ii);
        os << ',' << (has_enc && r.assignment[i] == r.encoder_assignment[i] ? 1 : 0) << '\n';
    }
    return os.str();
}

CosineHistogram max_cosine_histogram(const Matrix& a, const Matrix& b, Index bins) {
    if (bins < 1) throw ConfigError("histogram needs bins >= 1");
    const Matrix cos = column_cosines(a, b);
    CosineHistogram h;
    h.edges.resize(static_cast<std::size_t>(bins + 1));
    for (Index k = 0; k <= bins; ++k) h.edges[static_cast<std::size_t>(k)] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(bins);
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (Index r = 0; r < cos.rows(); ++r) {
        const double best = cos.row(r).maxCoeff();
        h.maxima.push_back(best);
        auto bin = static_cast<Index>(std::floor((best + 1.0) / 2.0 * static_cast<double>(bins)));
        bin = std::clamp<Index>(bin, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

std::string to_csv(const CosineHistogram& h) {
    std::ostringstream os;
    os.precision(17);
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        os << h.edges[k] << ',' << h.edges[k + 1] << ',' << h.counts[k] << '\n';
    }
    return os.str();
}

}  // namespace saekit
