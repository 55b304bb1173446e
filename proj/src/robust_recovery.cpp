#include "attnx/robust_recovery.hpp"

#include "attnx/error.hpp"

#include <algorithm>
#include <cmath>

namespace attnx::robust {

void RobustConfig::validate() const {
    if (!(norm_bound >= 2.0)) throw Error(ErrorKind::InvalidInput, "norm bound must be >= 2");
    if (!(margin > 0.0)) throw Error(ErrorKind::InvalidInput, "margin must be positive");
    if (!(eps_v > 0.0 && eps_v < 1.0) || !(eps_w > 0.0 && eps_w < 1.0))
        throw Error(ErrorKind::InvalidInput, "accuracy targets must lie in (0, 1)");
    if (!(tolerance_scale > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerance scale must be positive");
}

ToleranceSchedule tolerance_schedule(const RobustConfig& config, std::size_t dim) {
    const double d = static_cast<double>(dim);
    const double W = config.norm_bound;
    const double entry = config.margin * config.eps_w / (80.0 * W * W * d);
    const double value = std::min({config.margin / 2.0, entry, config.eps_v / std::sqrt(d)});
    return {value * config.tolerance_scale, entry * config.tolerance_scale};
}

double clip_floor() { return sigmoid(-0.5); }

double clipped_logit(double alpha_hat) {
    const double lo = clip_floor();
    return logit(std::clamp(alpha_hat, lo, 1.0 - lo));
}

Vector recover_value_vector_robust(OracleSession& session, double tau_v) {
    const auto d = static_cast<Eigen::Index>(session.dim());
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i)
        v(i) = session.avq(SequenceInput::single(Vector::Unit(d, i)), tau_v);
    return v;
}

EntryEstimate estimate_entry(OracleSession& session, const Vector& value_vector, std::size_t row,
                             std::size_t column, double tau_f, const RobustConfig& config) {
    const auto d = value_vector.size();
    const auto i = static_cast<Eigen::Index>(row);
    const auto j = static_cast<Eigen::Index>(column);
    if (value_vector(i) == 0.0) throw Error(ErrorKind::InvalidInput, "value estimate is zero at the probed row");

    const double a = config.probe_a();
    const double b = config.probe_b();
    const Vector tail = a * Vector::Unit(d, j);
    const Vector head = b * Vector::Unit(d, i) + tail;
    const double reply = session.avq(SequenceInput::pair(head, tail), tau_f);

    const double alpha_hat = (reply - a * value_vector(j)) / (b * value_vector(i));
    return {clipped_logit(alpha_hat) / (a * b), alpha_hat};
}

RecoveryReport recover_robust(OracleSession& session, const RobustConfig& config, Matrix* alpha_trace) {
    config.validate();
    Stopwatch clock;
    RecoveryReport report;
    const std::size_t start = session.query_count();
    const std::size_t d = session.dim();
    const ToleranceSchedule schedule = tolerance_schedule(config, d);

    report.value_vector = recover_value_vector_robust(session, schedule.value);
    const auto n = static_cast<Eigen::Index>(d);
    report.score_matrix.resize(n, n);
    if (alpha_trace) alpha_trace->resize(n, n);

    std::size_t clipped = 0;
    const double lo = clip_floor();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const EntryEstimate e = estimate_entry(session, report.value_vector, static_cast<std::size_t>(i),
                                                   static_cast<std::size_t>(j), schedule.entry, config);
            report.score_matrix(i, j) = e.value;
            if (alpha_trace) (*alpha_trace)(i, j) = e.alpha_hat;
            if (e.alpha_hat < lo || e.alpha_hat > 1.0 - lo) ++clipped;
        }

    report.diagnostics["tau_v"] = schedule.value;
    report.diagnostics["tau_f"] = schedule.entry;
    report.diagnostics["clipped_entries"] = static_cast<double>(clipped);
    report.diagnostics["min_abs_value_estimate"] = report.value_vector.cwiseAbs().minCoeff();
    report.queries_used = session.query_count() - start;
    report.elapsed = clock.elapsed();
    return report;
}

} // namespace attnx::robust
