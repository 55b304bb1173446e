#include "attnx/exact_recovery.hpp"

#include "attnx/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace attnx::exact {

namespace {

Vector basis(std::size_t d, std::size_t i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(d));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    return e;
}

} // namespace

double probe_logit(ValueOracle& oracle, const Vector& value_vector, const Vector& a, const Vector& b,
                   const LogitOptions& options, LogitStats* stats) {
    const double denom0 = a.dot(value_vector);
    if (!(std::abs(denom0) > options.zero_threshold)) {
        std::ostringstream os;
        os << "|a.v| = " << std::abs(denom0) << " is below the zero threshold";
        throw Error(ErrorKind::ProbeRejected, os.str());
    }
    const double offset = b.dot(value_vector);
    constexpr double eps = std::numeric_limits<double>::epsilon();

    double scale = 1.0;
    for (int attempt = 0;; ++attempt) {
        const Vector scaled = a / scale;
        const double denom = denom0 / scale;
        const double y = oracle.value(SequenceInput::pair(scaled + b, b));
        const double alpha = (y - offset) / denom;

        // Rounding in y and the dot products, amplified by the division.
        const double slack =
            1e-9 + 1e3 * eps * (std::abs(y) + std::abs(offset) + std::abs(denom)) / std::abs(denom);
        if (!std::isfinite(alpha) || alpha < -slack || alpha > 1.0 + slack) {
            std::ostringstream os;
            os << "implied attention weight " << alpha << " lies outside [0, 1]";
            throw Error(ErrorKind::OracleInconsistency, os.str());
        }
        const bool saturated = std::min(alpha, 1.0 - alpha) < options.saturation;
        if (saturated && attempt < options.max_rescales) {
            scale *= 2.0;
            if (stats) ++stats->rescales;
            continue;
        }
        const double clamped = std::clamp(alpha, options.clamp, 1.0 - options.clamp);
        const double t = logit(clamped) * scale;
        if (stats) {
            ++stats->probes;
            stats->max_abs_logit = std::max(stats->max_abs_logit, std::abs(t));
        }
        return t;
    }
}

Vector recover_value_vector(ValueOracle& oracle) {
    const std::size_t d = oracle.dim();
    Vector v(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i)) = oracle.value(SequenceInput::single(basis(d, i)));
    return v;
}

ProbeSet build_probe_set(const Vector& value_vector, ProbeScheme scheme, std::uint64_t seed,
                         double zero_threshold) {
    const Eigen::Index d = value_vector.size();
    Eigen::Index pivot = 0;
    const double largest = value_vector.cwiseAbs().maxCoeff(&pivot);
    if (!(largest > zero_threshold))
        throw Error(ErrorKind::NonIdentifiable, "value vector is zero, so the model is identically zero");

    ProbeSet set;
    set.scheme = scheme;
    set.pivot = static_cast<std::size_t>(pivot);
    set.probes = Matrix::Identity(d, d);

    if (scheme == ProbeScheme::Deterministic) {
        for (Eigen::Index l = 0; l < d; ++l)
            if (!(std::abs(value_vector(l)) > zero_threshold)) set.probes(l, pivot) += 1.0;
        return set;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int attempt = 0; attempt < 16; ++attempt) {
        for (Eigen::Index l = 0; l < d; ++l)
            for (Eigen::Index k = 0; k < d; ++k) set.probes(l, k) = normal(rng);
        const Vector dots = set.probes * value_vector;
        if (dots.cwiseAbs().minCoeff() <= zero_threshold) continue;
        Eigen::PartialPivLU<Matrix> lu(set.probes);
        if (lu.rcond() * kMaxCondition < 1.0) continue;
        return set;
    }
    throw Error(ErrorKind::ProbeConstruction, "Gaussian probe resampling exhausted after 16 attempts");
}

double measure_column_logit(ValueOracle& oracle, const Vector& value_vector, std::size_t column,
                            const Vector& probe, const LogitOptions& options, LogitStats* stats) {
    return probe_logit(oracle, value_vector, probe, basis(static_cast<std::size_t>(value_vector.size()), column),
                       options, stats);
}

Matrix recover_score_matrix(ValueOracle& oracle, const Vector& value_vector, const ProbeSet& probes,
                            const LogitOptions& options, RecoveryReport* diagnostics) {
    const Eigen::Index d = value_vector.size();
    if (probes.probes.rows() != d || probes.probes.cols() != d)
        throw Error(ErrorKind::Shape, "probe set must hold d probes of dimension d");

    Eigen::PartialPivLU<Matrix> lu(probes.probes);
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || 1.0 / rcond > kMaxCondition)
        throw Error(ErrorKind::IllConditioned, "probe matrix condition estimate exceeds 1e12");

    LogitStats stats;
    Matrix recovered(d, d);
    Vector logits(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index l = 0; l < d; ++l)
            logits(l) = measure_column_logit(oracle, value_vector, static_cast<std::size_t>(j),
                                             probes.probes.row(l).transpose(), options, &stats);
        recovered.col(j) = lu.solve(logits);
    }
    if (diagnostics) {
        diagnostics->diagnostics["probe_condition_estimate"] = 1.0 / rcond;
        diagnostics->diagnostics["probe_rescales"] = static_cast<double>(stats.rescales);
        diagnostics->diagnostics["max_abs_logit"] = stats.max_abs_logit;
        diagnostics->diagnostics["pivot_index"] = static_cast<double>(probes.pivot);
    }
    return recovered;
}

RecoveryReport recover(ValueOracle& oracle, const ExactConfig& config) {
    Stopwatch clock;
    RecoveryReport report;
    const std::size_t start = oracle.query_count();

    report.value_vector = recover_value_vector(oracle);
    const ProbeSet probes = build_probe_set(report.value_vector, config.scheme, config.probe_seed,
                                            config.logit.zero_threshold);
    report.score_matrix = recover_score_matrix(oracle, report.value_vector, probes, config.logit, &report);

    report.queries_used = oracle.query_count() - start;
    report.elapsed = clock.elapsed();
    return report;
}

} // namespace attnx::exact
