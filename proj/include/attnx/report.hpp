#pragma once

#include "attnx/model.hpp"

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>

namespace attnx {

/// Outcome of one extraction run. Error norms are filled in by whoever holds
/// the ground truth (tests, the CLI harness); learners never see it.
struct RecoveryReport {
    Matrix score_matrix;                 // recovered W
    Vector value_vector;                 // recovered v (or A w_o for transformers)
    std::optional<Matrix> hidden_matrix; // transformer only
    std::optional<Vector> output_vector; // transformer only

    std::optional<double> frobenius_error;
    std::optional<double> vector_error;

    std::size_t queries_used = 0;
    std::chrono::nanoseconds elapsed{0};
    bool converged = true;
    std::map<std::string, double> diagnostics;

    AttentionParams attention() const { return {score_matrix, value_vector}; }
    /// Fills frobenius_error / vector_error against known truth.
    void compare_with(const AttentionParams& truth);
};

/// Monotonic stopwatch used by the learners to fill RecoveryReport::elapsed.
class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    std::chrono::nanoseconds elapsed() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_);
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace attnx
