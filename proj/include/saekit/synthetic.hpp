#pragma once

#include <cstdint>
#include <string>

#include "saekit/rng.hpp"
#include "saekit/types.hpp"

namespace saekit {

// A planted sparse dictionary: x = x0 + sum_i c_i d_i with each c_i
// independently nonzero with probability k_active / M_true and magnitude
// Uniform(coeff_min, coeff_max).
struct SyntheticGroundTruth {
    Matrix dictionary;  // n x M_true, unit-norm columns
    Vector x0;          // n
    double k_active = 0.0;
    double coeff_min = 0.5;
    double coeff_max = 1.5;
    std::uint64_t seed = 0;

    Index input_dim() const { return dictionary.rows(); }
    Index num_features() const { return dictionary.cols(); }
    double activation_probability() const {
        return k_active / static_cast<double>(dictionary.cols());
    }
    std::string coeff_law() const;
};

// Dictionary columns are uniform on the unit sphere; x0 is a random direction
// scaled to `offset_norm`.
SyntheticGroundTruth synth_ground_truth(Index n, Index m_true, double k_active, std::uint64_t seed,
                                        double offset_norm = 0.5);

struct SyntheticSample {
    ActivationBatch batch;
    Matrix coefficients;  // count x M_true
};

SyntheticSample synth_generate(const SyntheticGroundTruth& gt, Index count, std::uint64_t seed);

// Row-at-a-time generator behind synth_generate. Rows drawn from a sampler with
// a given seed match synth_generate with the same seed.
class SyntheticSampler {
public:
    SyntheticSampler(const SyntheticGroundTruth& gt, std::uint64_t seed);

    // Writes one sample into `row` (length n) and, when non-null, its
    // coefficients into `coeffs` (length M_true).
    void next(double* row, double* coeffs = nullptr);

private:
    const SyntheticGroundTruth* gt_;
    Rng rng_;
};

}  // namespace saekit
