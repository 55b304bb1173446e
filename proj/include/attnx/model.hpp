#pragma once

// Model families evaluated by every oracle: single-head attention regressor,
// one-layer single-head Transformer and the merged multi-head sum.

#include <Eigen/Dense>

#include <cstddef>
#include <variant>
#include <vector>

namespace attnx {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A sequence of N >= 1 tokens, each a row vector of dimension d.
class SequenceInput {
public:
    /// Throws InvalidInput when `rows` is empty or any entry is non-finite.
    explicit SequenceInput(Matrix rows);
    /// Convenience for a single-token sequence.
    static SequenceInput single(const Vector& token);
    /// Two-token sequence [first; second].
    static SequenceInput pair(const Vector& first, const Vector& second);

    std::size_t length() const { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
    const Matrix& rows() const { return rows_; }
    auto row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)); }

    SequenceInput negated() const { return SequenceInput(Matrix(-rows_)); }

private:
    Matrix rows_;
};

struct AttentionParams {
    Matrix score_matrix; // W, d x d
    Vector value_vector; // v, d

    std::size_t dim() const { return static_cast<std::size_t>(value_vector.size()); }
    /// Throws Shape if W is not square or v does not match its side.
    void validate() const;
};

struct TransformerParams {
    Matrix score_matrix;  // W, d x d
    Matrix hidden_matrix; // A, d x m
    Vector output_vector; // w_o, m

    std::size_t dim() const { return static_cast<std::size_t>(score_matrix.rows()); }
    std::size_t hidden() const { return static_cast<std::size_t>(output_vector.size()); }
    void validate() const;
    /// Merged value vector A * w_o seen by the antisymmetric oracle.
    Vector merged_value() const { return hidden_matrix * output_vector; }
};

struct MultiHeadParams {
    std::vector<AttentionParams> heads;

    std::size_t dim() const { return heads.empty() ? 0 : heads.front().dim(); }
    /// Throws InvalidInput on an empty head list, Shape on inconsistent d.
    void validate() const;
};

using ModelParams = std::variant<AttentionParams, TransformerParams, MultiHeadParams>;

std::size_t model_dim(const ModelParams& model);

/// Numerically stable softmax (max subtraction). Throws InvalidInput on
/// empty or non-finite scores.
Vector softmax(const Vector& scores);

/// s_i = x_i^T W x_N for every row i.
Vector attention_scores(const Matrix& score_matrix, const SequenceInput& x);
Vector attention_weights(const Matrix& score_matrix, const SequenceInput& x);

double attention_forward(const AttentionParams& params, const SequenceInput& x);
double transformer_forward(const TransformerParams& params, const SequenceInput& x);
double multihead_forward(const MultiHeadParams& params, const SequenceInput& x);

/// Dispatches on the held model type.
double forward(const ModelParams& model, const SequenceInput& x);

/// Logistic function and its inverse, shared by the recovery modules.
double sigmoid(double t);
double logit(double p);

} // namespace attnx
