#pragma once

// Multi-head attention is not identifiable from value queries: when every
// head shares the score matrix A, splitting a value vector b across heads with
// any simplex weights leaves the function unchanged.

#include "attnx/model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace attnx::multihead {

/// Heads (A, lambda_h b) and (A, lambda'_h b). Throws InvalidInput if either
/// weight vector is off the simplex, the two coincide, or b = 0.
std::pair<MultiHeadParams, MultiHeadParams> build_equivalent_pair(const Matrix& shared_scores,
                                                                  const Vector& value, const Vector& weights,
                                                                  const Vector& other_weights);

/// Euclidean distance between two parameter lists (all W and v entries).
double parameter_distance(const MultiHeadParams& lhs, const MultiHeadParams& rhs);

struct EqualityReport {
    bool agree = true;
    double max_abs_diff = 0.0;
    std::optional<Matrix> witness;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::string disclaimer;
};

/// Sampling surrogate for functional equality; not a decision procedure.
/// Inputs have N uniform in {1..max_len} and standard normal entries.
EqualityReport functional_equality_test(const MultiHeadParams& lhs, const MultiHeadParams& rhs,
                                        std::size_t num_samples, std::size_t max_len, double tol,
                                        std::uint64_t seed);

} // namespace attnx::multihead
