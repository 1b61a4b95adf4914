#include "saekit/synthetic.hpp"

#include <sstream>

#include "saekit/errors.hpp"

namespace saekit {

std::string SyntheticGroundTruth::coeff_law() const {
    std::ostringstream os;
    os << "bernoulli(" << k_active << "/" << num_features() << ") * uniform(" << coeff_min << ", "
       << coeff_max << ")";
    return os.str();
}

SyntheticGroundTruth synth_ground_truth(Index n, Index m_true, double k_active, std::uint64_t seed,
                                        double offset_norm) {
    if (n < 1 || m_true < 1) throw ConfigError("synthetic ground truth needs n >= 1 and m_true >= 1");
    if (k_active < 0.0 || k_active > static_cast<double>(m_true)) {
        throw ConfigError("k_active must lie in [0, m_true]");
    }
    if (offset_norm < 0.0) throw ConfigError("offset_norm must be >= 0");

    Rng rng = make_rng(seed, "synthetic/dictionary");
    SyntheticGroundTruth gt;
    gt.k_active = k_active;
    gt.seed = seed;
    gt.dictionary.resize(n, m_true);
    for (Index j = 0; j < m_true; ++j) {
        double norm = 0.0;
        do {
            for (Index i = 0; i < n; ++i) gt.dictionary(i, j) = standard_normal(rng);
            norm = gt.dictionary.col(j).norm();
        } while (norm < 1e-12);
        gt.dictionary.col(j) /= norm;
    }
    gt.x0.resize(n);
    for (Index i = 0; i < n; ++i) gt.x0(i) = standard_normal(rng);
    const double x0_norm = gt.x0.norm();
    gt.x0 *= x0_norm > 0.0 ? offset_norm / x0_norm : 0.0;
    return gt;
}

SyntheticSampler::SyntheticSampler(const SyntheticGroundTruth& gt, std::uint64_t seed)
    : gt_(&gt), rng_(make_rng(seed, "synthetic/samples")) {}

void SyntheticSampler::next(double* row, double* coeffs) {
    const Index n = gt_->input_dim();
    const Index m = gt_->num_features();
    const double p = gt_->activation_probability();
    const double span = gt_->coeff_max - gt_->coeff_min;
    Eigen::Map<Vector> out(row, n);
    out = gt_->x0;
    for (Index j = 0; j < m; ++j) {
        double c = 0.0;
        if (uniform01(rng_) < p) {
            c = gt_->coeff_min + span * uniform01(rng_);
            out += c * gt_->dictionary.col(j);
        }
        if (coeffs != nullptr) coeffs[j] = c;
    }
}

SyntheticSample synth_generate(const SyntheticGroundTruth& gt, Index count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("synth_generate needs count >= 1");
    SyntheticSample out;
    out.batch.rows.resize(count, gt.input_dim());
    out.coefficients.resize(count, gt.num_features());
    out.batch.source_tag = "synthetic";
    out.batch.row_ids.resize(static_cast<std::size_t>(count));
    SyntheticSampler sampler(gt, seed);
    for (Index r = 0; r < count; ++r) {
        sampler.next(out.batch.rows.row(r).data(), out.coefficients.row(r).data());
        out.batch.row_ids[static_cast<std::size_t>(r)] = static_cast<std::uint64_t>(r);
    }
    return out;
}

}  // namespace saekit
