#include "attnx/report.hpp"

namespace attnx {

void RecoveryReport::compare_with(const AttentionParams& truth) {
    if (score_matrix.rows() == truth.score_matrix.rows() && score_matrix.cols() == truth.score_matrix.cols())
        frobenius_error = (score_matrix - truth.score_matrix).norm();
    if (value_vector.size() == truth.value_vector.size())
        vector_error = (value_vector - truth.value_vector).norm();
}

} // namespace attnx
