#include "attnx/multihead_analysis.hpp"

#include "attnx/error.hpp"
#include "attnx/random.hpp"

#include <cmath>

namespace attnx::multihead {

namespace {

void check_simplex(const Vector& w) {
    if (w.size() < 1 || (w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidInput, "head weights must be nonnegative and sum to 1");
}

} // namespace

std::pair<MultiHeadParams, MultiHeadParams> build_equivalent_pair(const Matrix& shared_scores,
                                                                  const Vector& value, const Vector& weights,
                                                                  const Vector& other_weights) {
    check_simplex(weights);
    check_simplex(other_weights);
    if (weights.size() != other_weights.size())
        throw Error(ErrorKind::InvalidInput, "both weight vectors need one entry per head");
    if (weights == other_weights) throw Error(ErrorKind::InvalidInput, "weight vectors must differ");
    if (value.isZero(0.0)) throw Error(ErrorKind::InvalidInput, "value vector must be nonzero");

    MultiHeadParams first, second;
    for (Eigen::Index h = 0; h < weights.size(); ++h) {
        first.heads.push_back({shared_scores, weights(h) * value});
        second.heads.push_back({shared_scores, other_weights(h) * value});
    }
    first.validate();
    return {std::move(first), std::move(second)};
}

double parameter_distance(const MultiHeadParams& lhs, const MultiHeadParams& rhs) {
    if (lhs.heads.size() != rhs.heads.size()) throw Error(ErrorKind::Shape, "head counts differ");
    double sq = 0.0;
    for (std::size_t h = 0; h < lhs.heads.size(); ++h) {
        sq += (lhs.heads[h].score_matrix - rhs.heads[h].score_matrix).squaredNorm();
        sq += (lhs.heads[h].value_vector - rhs.heads[h].value_vector).squaredNorm();
    }
    return std::sqrt(sq);
}

EqualityReport functional_equality_test(const MultiHeadParams& lhs, const MultiHeadParams& rhs,
                                        std::size_t num_samples, std::size_t max_len, double tol,
                                        std::uint64_t seed) {
    lhs.validate();
    rhs.validate();
    if (lhs.dim() != rhs.dim()) throw Error(ErrorKind::Shape, "models have different token dimensions");
    if (max_len < 1) throw Error(ErrorKind::InvalidInput, "max_len must be >= 1");

    EqualityReport report;
    report.seed = seed;
    report.samples = num_samples;
    report.disclaimer = "sampling-based check; agreement on samples does not prove functional equality";

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> length(1, max_len);
    for (std::size_t s = 0; s < num_samples; ++s) {
        const SequenceInput x = gaussian_sequence(rng, length(rng), lhs.dim());
        const double diff = std::abs(multihead_forward(lhs, x) - multihead_forward(rhs, x));
        report.max_abs_diff = std::max(report.max_abs_diff, diff);
        if (diff > tol && !report.witness) {
            report.agree = false;
            report.witness = x.rows();
        }
    }
    return report;
}

} // namespace attnx::multihead
