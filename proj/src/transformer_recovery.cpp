#include "attnx/transformer_recovery.hpp"

#include "attnx/error.hpp"
#include "attnx/random.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace attnx::transformer {

double AntisymmetricOracle::value(const SequenceInput& x) {
    ++calls_;
    const double plus = inner_.value(x);
    const double minus = inner_.value(x.negated());
    return plus - minus;
}

double TokenRestriction::evaluate(const Vector& x) {
    ++calls_;
    return inner_.value(SequenceInput::single(x));
}

double ffn_forward(const Matrix& hidden_matrix, const Vector& output_vector, const Vector& x) {
    return output_vector.dot((hidden_matrix.transpose() * x).cwiseMax(0.0));
}

namespace {

struct Kink {
    double t;
    double slope_jump; // right slope minus left slope along the line
};

// Piecewise-linear search for the kinks of t -> f(p + t q).
class LineSearch {
public:
    LineSearch(ScalarFunctionOracle& oracle, const Vector& origin, const Vector& direction,
               const ReferenceLearnerConfig& config)
        : oracle_(oracle), origin_(origin), direction_(direction), config_(config) {}

    double at(double t) { return oracle_.evaluate(origin_ + t * direction_); }

    std::vector<Kink> run() {
        const int n = std::max(config_.grid_points, 3);
        const double h = config_.line_half_width;
        std::vector<double> ts(static_cast<std::size_t>(n)), fs(ts.size());
        for (int k = 0; k < n; ++k) {
            ts[static_cast<std::size_t>(k)] = -h + 2.0 * h * k / (n - 1);
            fs[static_cast<std::size_t>(k)] = at(ts[static_cast<std::size_t>(k)]);
        }
        scale_ = 1.0;
        for (double f : fs) scale_ = std::max(scale_, std::abs(f));

        // Windows [k-1, k+1] whose second difference is nonzero, merged.
        std::vector<std::pair<int, int>> windows;
        for (int k = 1; k + 1 < n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            const double curvature = fs[i - 1] - 2.0 * fs[i] + fs[i + 1];
            if (std::abs(curvature) <= config_.curvature_threshold * scale_) continue;
            if (!windows.empty() && windows.back().second >= k - 1) windows.back().second = k + 1;
            else windows.emplace_back(k - 1, k + 1);
        }
        std::vector<Kink> kinks;
        for (auto [lo, hi] : windows) {
            const auto l = static_cast<std::size_t>(lo), r = static_cast<std::size_t>(hi);
            search(ts[l], ts[r], fs[l], fs[r], 0, kinks);
        }
        std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) { return a.t < b.t; });
        return kinks;
    }

    double scale() const { return scale_; }

private:
    void search(double l, double r, double fl, double fr, int depth, std::vector<Kink>& out) {
        const double eps = 1e-3 * (r - l);
        const double left_slope = (at(l + eps) - fl) / eps;
        const double right_slope = (fr - at(r - eps)) / eps;
        const double jump = right_slope - left_slope;
        if (std::abs(jump) <= config_.curvature_threshold * scale_) return;

        const double t = (fr - fl + left_slope * l - right_slope * r) / (left_slope - right_slope);
        if (t > l + eps && t < r - eps) {
            const double predicted = fl + left_slope * (t - l);
            if (std::abs(at(t) - predicted) <= 1e-8 * scale_) {
                out.push_back({t, jump});
                return;
            }
        }
        if (depth >= 40 || r - l < config_.bracket_width) return;
        const double mid = 0.5 * (l + r);
        const double fm = at(mid);
        search(l, mid, fl, fm, depth + 1, out);
        search(mid, r, fm, fr, depth + 1, out);
    }

    ScalarFunctionOracle& oracle_;
    Vector origin_;
    Vector direction_;
    const ReferenceLearnerConfig& config_;
    double scale_ = 1.0;
};

Vector central_gradient(ScalarFunctionOracle& oracle, const Vector& x, double step) {
    const auto d = x.size();
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const Vector e = Vector::Unit(d, i) * step;
        g(i) = (oracle.evaluate(x + e) - oracle.evaluate(x - e)) / (2.0 * step);
    }
    return g;
}

// Fixes the sign ambiguity of a hyperplane normal for deduplication.
Vector canonical_direction(Vector v) {
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
    return v;
}

Matrix relu_features(const Matrix& points, const std::vector<Vector>& directions) {
    const auto count = static_cast<Eigen::Index>(directions.size());
    Matrix features(points.rows(), count);
    for (Eigen::Index j = 0; j < count; ++j)
        features.col(j) = (points * directions[static_cast<std::size_t>(j)]).cwiseMax(0.0);
    return features;
}

} // namespace

FfnLearnerResult ReferenceFfnLearner::learn(ScalarFunctionOracle& oracle, std::size_t dim, std::size_t hidden) {
    if (hidden < 1) throw Error(ErrorKind::InvalidInput, "hidden width must be >= 1");
    if (hidden > dim) throw Error(ErrorKind::UnsupportedConfiguration, "reference FFN learner requires m <= d");
    const auto d = static_cast<Eigen::Index>(dim);
    Rng rng(config_.seed);

    std::vector<Vector> directions;
    const int budget = config_.line_budget_factor * static_cast<int>(hidden);
    for (int line = 0; line < budget && directions.size() < hidden; ++line) {
        const Vector origin = gaussian_vector(rng, d);
        const Vector heading = unit_vector(rng, d);
        LineSearch search(oracle, origin, heading, config_);
        const std::vector<Kink> kinks = search.run();

        for (std::size_t k = 0; k < kinks.size() && directions.size() < hidden; ++k) {
            const double t = kinks[k].t;
            const double gap_before = k > 0 ? t - kinks[k - 1].t : INFINITY;
            const double gap_after = k + 1 < kinks.size() ? kinks[k + 1].t - t : INFINITY;
            if (std::min(gap_before, gap_after) < 4.0 * config_.side_offset) continue;

            const Vector crossing = origin + t * heading;
            const Vector jump = central_gradient(oracle, crossing + config_.side_offset * heading, config_.fd_step) -
                                central_gradient(oracle, crossing - config_.side_offset * heading, config_.fd_step);
            const double jump_norm = jump.norm();
            if (!(jump_norm > 1e-6 * search.scale())) continue;
            const Vector normal = jump / jump_norm;
            if (std::abs(normal.dot(heading)) < config_.min_crossing_cosine) continue;
            // A single-hyperplane crossing makes the gradient jump agree with the
            // slope jump measured along the line.
            if (std::abs(jump.dot(heading) - kinks[k].slope_jump) > 1e-5 * std::max(1.0, jump_norm)) continue;

            const Vector candidate = canonical_direction(normal);
            const bool seen = std::any_of(directions.begin(), directions.end(), [&](const Vector& known) {
                return std::abs(known.dot(candidate)) > 1.0 - config_.duplicate_cosine;
            });
            if (!seen) directions.push_back(candidate);
        }
    }
    if (directions.size() < hidden) {
        std::ostringstream os;
        os << "found " << directions.size() << " of " << hidden << " hyperplanes within " << budget << " lines";
        throw Error(ErrorKind::LearnerFailure, os.str());
    }

    // Fit f(x) = sum_j c_j ReLU(a_j . x) + g . x, then realise the linear part
    // by flipping a subset S of columns: c ReLU(-z) = c ReLU(z) - c z, so we
    // need g = -sum_{j in S} c_j a_j. With dependent columns several S work.
    const auto m = static_cast<Eigen::Index>(hidden);
    if (m > 20) throw Error(ErrorKind::UnsupportedConfiguration, "reference FFN learner supports m <= 20");
    const Eigen::Index fit_count = 2 * (m + d) + 10;
    const Matrix points = gaussian_matrix(rng, fit_count, d);
    Vector targets(fit_count);
    for (Eigen::Index k = 0; k < fit_count; ++k) targets(k) = oracle.evaluate(points.row(k).transpose());
    Matrix features(fit_count, m + d);
    features.leftCols(m) = relu_features(points, directions);
    features.rightCols(d) = points;
    const Vector coeffs = features.colPivHouseholderQr().solve(targets);
    const Vector c = coeffs.head(m);
    const Vector g = coeffs.tail(d);

    unsigned long best_mask = 0;
    double best = INFINITY;
    for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
        Vector r = g;
        for (Eigen::Index j = 0; j < m; ++j)
            if (mask >> j & 1ul) r += c(j) * directions[static_cast<std::size_t>(j)];
        const double norm = r.norm();
        if (norm < best - 1e-12) {
            best = norm;
            best_mask = mask;
        }
    }
    if (best > 1e-6 * (1.0 + g.norm() + c.cwiseAbs().sum()))
        throw Error(ErrorKind::LearnerFailure, "linear part of the fit is not realisable by flipping hyperplanes");

    FfnLearnerResult result;
    result.hidden_matrix.resize(d, m);
    result.output_vector = c;
    for (Eigen::Index j = 0; j < m; ++j) {
        const Vector& dir = directions[static_cast<std::size_t>(j)];
        result.hidden_matrix.col(j) = (best_mask >> j & 1ul) ? Vector(-dir) : dir;
    }

    const Eigen::Index check_count = 2 * m + 10;
    const Matrix held_out = gaussian_matrix(rng, check_count, d);
    for (Eigen::Index k = 0; k < check_count; ++k) {
        const Vector x = held_out.row(k).transpose();
        const double expected = oracle.evaluate(x);
        const double got = ffn_forward(result.hidden_matrix, result.output_vector, x);
        if (std::abs(got - expected) > config_.validation_tolerance * (1.0 + std::abs(expected)))
            throw Error(ErrorKind::LearnerFailure, "learned FFN disagrees with the oracle on held-out points");
    }
    result.equivalence_note =
        "equivalent up to column permutation and positive per-column rescaling; columns are unit-norm "
        "with scale folded into the output vector";
    return result;
}

FfnLearnerResult reference_ffn_learner(ScalarFunctionOracle& oracle, std::size_t dim, std::size_t hidden,
                                       const ReferenceLearnerConfig& config) {
    return ReferenceFfnLearner(config).learn(oracle, dim, hidden);
}

RecoveryReport recover_transformer(ValueOracle& session, FfnLearner* learner, std::size_t hidden,
                                   const exact::ExactConfig& config) {
    Stopwatch clock;
    const std::size_t start = session.query_count();
    std::optional<FfnLearnerResult> ffn;
    std::size_t ffn_queries = 0;
    if (learner) {
        TokenRestriction restricted(session);
        ffn = learner->learn(restricted, session.dim(), hidden);
        ffn_queries = restricted.query_count();
    }

    AntisymmetricOracle antisymmetric(session);
    RecoveryReport report = exact::recover(antisymmetric, config);
    report.diagnostics["ffn_queries"] = static_cast<double>(ffn_queries);
    report.diagnostics["antisymmetric_calls"] = static_cast<double>(antisymmetric.query_count());
    if (ffn) {
        report.diagnostics["value_crosscheck"] =
            (ffn->hidden_matrix * ffn->output_vector - report.value_vector).norm();
        report.hidden_matrix = std::move(ffn->hidden_matrix);
        report.output_vector = std::move(ffn->output_vector);
    }
    report.queries_used = session.query_count() - start;
    report.elapsed = clock.elapsed();
    return report;
}

} // namespace attnx::transformer
