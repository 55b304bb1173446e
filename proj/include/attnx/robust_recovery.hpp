#pragma once

// epsilon-accurate extraction from a tolerance-tau oracle.
//
// Entry (i, j) is read from the probe [(b e_i + a e_j)^T; (a e_j)^T] with
// a = 1/2, b = 1/W. Its first-row weight is sigmoid(ab W_ij) with
// |ab W_ij| <= 1/2, so the logit is only ever inverted on
// [sigmoid(-1/2), 1 - sigmoid(-1/2)] where it is 5-Lipschitz.

#include "attnx/oracle.hpp"
#include "attnx/report.hpp"

#include <cstddef>
#include <optional>

namespace attnx::robust {

struct RobustConfig {
    double norm_bound = 2.0; // W >= 2, ||W*||_F <= W
    double margin = 0.1;     // mu, min_i |v*_i| >= mu
    double eps_v = 0.1;
    double eps_w = 0.1;
    /// Multiplies both scheduled tolerances (1 = on schedule).
    double tolerance_scale = 1.0;

    /// Throws InvalidInput unless W >= 2, mu > 0, both targets lie in (0, 1)
    /// and the tolerance scale is positive.
    void validate() const;
    double probe_a() const { return 0.5; }
    double probe_b() const { return 1.0 / norm_bound; }
};

struct ToleranceSchedule {
    double value; // tau_v
    double entry; // tau_f
};

/// tau_f = mu eps_W / (80 W^2 d), tau_v = min(mu/2, tau_f, eps_v/sqrt(d)),
/// both multiplied by tolerance_scale.
ToleranceSchedule tolerance_schedule(const RobustConfig& config, std::size_t dim);

/// sigmoid(-1/2), the lower clipping edge.
double clip_floor();
/// logit(clip(alpha_hat)) on [sigmoid(-1/2), 1 - sigmoid(-1/2)]; range [-1/2, 1/2].
double clipped_logit(double alpha_hat);

/// d tolerance-tau_v queries on the one-token basis inputs.
Vector recover_value_vector_robust(OracleSession& session, double tau_v);

struct EntryEstimate {
    double value;      // W_ij estimate
    double alpha_hat;  // unclipped first-row weight estimate
};

EntryEstimate estimate_entry(OracleSession& session, const Vector& value_vector, std::size_t row,
                             std::size_t column, double tau_f, const RobustConfig& config);

/// d + d^2 queries. When `alpha_trace` is given it receives the unclipped
/// weight estimate for every entry.
RecoveryReport recover_robust(OracleSession& session, const RobustConfig& config,
                              Matrix* alpha_trace = nullptr);

} // namespace attnx::robust
