#include "attnx/model.hpp"

#include "attnx/error.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace attnx {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Shape: return "shape-error";
    case ErrorKind::Protocol: return "protocol-error";
    case ErrorKind::ToleranceUnsatisfiable: return "tolerance-unsatisfiable";
    case ErrorKind::NonIdentifiable: return "non-identifiable";
    case ErrorKind::ProbeConstruction: return "probe-construction-failure";
    case ErrorKind::ProbeRejected: return "probe-rejected";
    case ErrorKind::OracleInconsistency: return "oracle-inconsistency";
    case ErrorKind::IllConditioned: return "ill-conditioned-probes";
    case ErrorKind::LearnerFailure: return "learner-failure";
    case ErrorKind::UnsupportedConfiguration: return "unsupported-configuration";
    case ErrorKind::ConstraintInfeasible: return "constraint-infeasible";
    case ErrorKind::Numerical: return "numerical-error";
    }
    return "unknown";
}

namespace {

std::string shape_message(const char* what, Eigen::Index got, Eigen::Index want) {
    std::ostringstream os;
    os << what << ": got " << got << ", expected " << want;
    return os.str();
}

void check_dim(const SequenceInput& x, std::size_t d) {
    if (x.dim() != d)
        throw Error(ErrorKind::Shape,
                    shape_message("input token dimension", static_cast<Eigen::Index>(x.dim()),
                                  static_cast<Eigen::Index>(d)));
}

} // namespace

SequenceInput::SequenceInput(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1)
        throw Error(ErrorKind::InvalidInput, "sequence must contain at least one token of dimension >= 1");
    if (!rows_.allFinite())
        throw Error(ErrorKind::InvalidInput, "sequence entries must be finite");
}

SequenceInput SequenceInput::single(const Vector& token) {
    Matrix rows(1, token.size());
    rows.row(0) = token.transpose();
    return SequenceInput(std::move(rows));
}

SequenceInput SequenceInput::pair(const Vector& first, const Vector& second) {
    if (first.size() != second.size())
        throw Error(ErrorKind::Shape, shape_message("second token dimension", second.size(), first.size()));
    Matrix rows(2, first.size());
    rows.row(0) = first.transpose();
    rows.row(1) = second.transpose();
    return SequenceInput(std::move(rows));
}

void AttentionParams::validate() const {
    if (score_matrix.rows() != score_matrix.cols())
        throw Error(ErrorKind::Shape, "score matrix must be square");
    if (value_vector.size() != score_matrix.rows())
        throw Error(ErrorKind::Shape,
                    shape_message("value vector length", value_vector.size(), score_matrix.rows()));
    if (value_vector.size() < 1)
        throw Error(ErrorKind::Shape, "dimension must be >= 1");
}

void TransformerParams::validate() const {
    if (score_matrix.rows() != score_matrix.cols() || score_matrix.rows() < 1)
        throw Error(ErrorKind::Shape, "score matrix must be square with d >= 1");
    if (hidden_matrix.rows() != score_matrix.rows())
        throw Error(ErrorKind::Shape,
                    shape_message("hidden matrix rows", hidden_matrix.rows(), score_matrix.rows()));
    if (output_vector.size() != hidden_matrix.cols() || output_vector.size() < 1)
        throw Error(ErrorKind::Shape,
                    shape_message("output vector length", output_vector.size(), hidden_matrix.cols()));
}

void MultiHeadParams::validate() const {
    if (heads.empty()) throw Error(ErrorKind::InvalidInput, "multi-head model needs at least one head");
    const auto d = heads.front().dim();
    for (const auto& head : heads) {
        head.validate();
        if (head.dim() != d) throw Error(ErrorKind::Shape, "all heads must share the same dimension");
    }
}

std::size_t model_dim(const ModelParams& model) {
    return std::visit([](const auto& p) { return p.dim(); }, model);
}

Vector softmax(const Vector& scores) {
    if (scores.size() < 1) throw Error(ErrorKind::InvalidInput, "softmax of an empty vector");
    if (!scores.allFinite()) throw Error(ErrorKind::InvalidInput, "softmax input must be finite");
    const double shift = scores.maxCoeff();
    Vector out = (scores.array() - shift).exp().matrix();
    out /= out.sum();
    return out;
}

Vector attention_scores(const Matrix& score_matrix, const SequenceInput& x) {
    check_dim(x, static_cast<std::size_t>(score_matrix.rows()));
    const Vector query = score_matrix * x.row(x.length() - 1).transpose();
    return x.rows() * query;
}

Vector attention_weights(const Matrix& score_matrix, const SequenceInput& x) {
    return softmax(attention_scores(score_matrix, x));
}

double attention_forward(const AttentionParams& params, const SequenceInput& x) {
    params.validate();
    const Vector alpha = attention_weights(params.score_matrix, x);
    const Vector values = x.rows() * params.value_vector;
    return alpha.dot(values);
}

double transformer_forward(const TransformerParams& params, const SequenceInput& x) {
    params.validate();
    const Vector alpha = attention_weights(params.score_matrix, x);
    const Vector context = (alpha.transpose() * x.rows() * params.hidden_matrix).transpose();
    return params.output_vector.dot(context.cwiseMax(0.0));
}

double multihead_forward(const MultiHeadParams& params, const SequenceInput& x) {
    params.validate();
    double total = 0.0;
    for (const auto& head : params.heads) total += attention_forward(head, x);
    return total;
}

double forward(const ModelParams& model, const SequenceInput& x) {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AttentionParams>) return attention_forward(p, x);
            else if constexpr (std::is_same_v<T, TransformerParams>) return transformer_forward(p, x);
            else return multihead_forward(p, x);
        },
        model);
}

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

} // namespace attnx
