#pragma once

// One-layer single-head Transformer extraction.
//
// TF(X) - TF(-X) cancels the ReLU (scores are invariant under X -> -X), which
// leaves a plain attention oracle with value vector A w_o; the exact learner
// runs on it unchanged. One-token queries expose the bias-free FFN
// x -> w_o . ReLU(x^T A), which is handed to a pluggable FFN learner.

#include "attnx/exact_recovery.hpp"
#include "attnx/oracle.hpp"
#include "attnx/report.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace attnx::transformer {

/// VQ(X) - VQ(-X). query_count() counts derived calls; each spends two
/// underlying queries.
class AntisymmetricOracle : public ValueOracle {
public:
    explicit AntisymmetricOracle(ValueOracle& inner) : inner_(inner) {}

    double value(const SequenceInput& x) override;
    std::size_t query_count() const override { return calls_; }
    std::size_t dim() const override { return inner_.dim(); }
    std::size_t underlying_queries() const { return 2 * calls_; }

private:
    ValueOracle& inner_;
    std::size_t calls_ = 0;
};

/// Query access to a scalar function of a single d-vector.
class ScalarFunctionOracle {
public:
    virtual ~ScalarFunctionOracle() = default;
    virtual double evaluate(const Vector& x) = 0;
    virtual std::size_t query_count() const = 0;
    virtual std::size_t dim() const = 0;
};

/// Restricts a sequence oracle to length-one inputs.
class TokenRestriction : public ScalarFunctionOracle {
public:
    explicit TokenRestriction(ValueOracle& inner) : inner_(inner) {}

    double evaluate(const Vector& x) override;
    std::size_t query_count() const override { return calls_; }
    std::size_t dim() const override { return inner_.dim(); }

private:
    ValueOracle& inner_;
    std::size_t calls_ = 0;
};

struct FfnLearnerResult {
    Matrix hidden_matrix; // d x m, unit-norm columns
    Vector output_vector; // m
    std::string equivalence_note;
};

class FfnLearner {
public:
    virtual ~FfnLearner() = default;
    virtual FfnLearnerResult learn(ScalarFunctionOracle& oracle, std::size_t dim, std::size_t hidden) = 0;
};

struct ReferenceLearnerConfig {
    int grid_points = 64;
    double line_half_width = 4.0;
    double curvature_threshold = 1e-6; // relative to the local value scale
    double bracket_width = 1e-10;
    double fd_step = 1e-5;
    double side_offset = 1e-3;
    int line_budget_factor = 50;      // lines = factor * m
    double duplicate_cosine = 1e-6;   // directions merge when |cos| > 1 - this
    double min_crossing_cosine = 0.05; // |a_hat . q| below this is too grazing to trust
    double validation_tolerance = 1e-6;
    std::uint64_t seed = 0;
};

/// Critical-hyperplane search along random lines, gradient jumps for the
/// column directions, then a least-squares fit of the output weights.
/// Assumes no biases, nonzero pairwise non-parallel columns, nonzero output
/// weights and m <= d. Result is equivalent up to column permutation and
/// positive per-column rescaling.
class ReferenceFfnLearner : public FfnLearner {
public:
    explicit ReferenceFfnLearner(ReferenceLearnerConfig config = {}) : config_(config) {}

    /// Throws UnsupportedConfiguration for m > d, LearnerFailure when fewer
    /// than m hyperplanes turn up or the fit fails validation.
    FfnLearnerResult learn(ScalarFunctionOracle& oracle, std::size_t dim, std::size_t hidden) override;

private:
    ReferenceLearnerConfig config_;
};

FfnLearnerResult reference_ffn_learner(ScalarFunctionOracle& oracle, std::size_t dim, std::size_t hidden,
                                       const ReferenceLearnerConfig& config = {});

/// `learner` may be null, in which case only the attention part is recovered.
/// `hidden` is the FFN width m. Throws NonIdentifiable if A w_o = 0.
RecoveryReport recover_transformer(ValueOracle& session, FfnLearner* learner, std::size_t hidden,
                                   const exact::ExactConfig& config = {});

/// w_o . ReLU(x^T A) for a learned FFN.
double ffn_forward(const Matrix& hidden_matrix, const Vector& output_vector, const Vector& x);

} // namespace attnx::transformer
