#pragma once

// Exact extraction of (W, v) from d + d^2 exact value queries.
//
// Phase one reads v from the d one-token inputs [e_i^T]. Phase two issues the
// two-token probe [(u + e_j)^T; e_j^T]; softmax over two scores reduces to a
// sigmoid of u^T w_j, which is inverted and stacked into Z w_j = t per column.

#include "attnx/oracle.hpp"
#include "attnx/report.hpp"

#include <cstddef>
#include <cstdint>

namespace attnx::exact {

inline constexpr double kZeroThreshold = 1e-12;
inline constexpr double kAlphaClamp = 1e-15;
inline constexpr double kMaxCondition = 1e12;

enum class ProbeScheme { Deterministic, Gaussian };

struct ProbeSet {
    Matrix probes;         // row l is u_l
    std::size_t pivot = 0; // index p with v_p != 0 (deterministic scheme)
    ProbeScheme scheme = ProbeScheme::Deterministic;

    std::size_t size() const { return static_cast<std::size_t>(probes.rows()); }
};

/// Knobs shared by every two-token logit probe (also used by the low-rank path).
struct LogitOptions {
    double zero_threshold = kZeroThreshold;
    double clamp = kAlphaClamp;
    /// A weight closer than this to 0 or 1 counts as saturated and triggers
    /// probe rescaling.
    double saturation = 1e-8;
    int max_rescales = 16;
};

/// Running counters for probe rescaling; each rescale costs one extra query.
struct LogitStats {
    std::size_t probes = 0;
    std::size_t rescales = 0;
    double max_abs_logit = 0.0;
};

/// Issues X = [(a + b)^T; b^T] and returns sigma^{-1}((y - b.v)/(a.v)) = a^T W b.
/// Throws ProbeRejected if |a.v| is below the threshold and OracleInconsistency
/// if the implied attention weight leaves [0, 1] beyond rounding.
double probe_logit(ValueOracle& oracle, const Vector& value_vector, const Vector& a, const Vector& b,
                   const LogitOptions& options = {}, LogitStats* stats = nullptr);

/// v_i = VQ([e_i^T]) for every i; exactly d queries.
Vector recover_value_vector(ValueOracle& oracle);

/// Throws NonIdentifiable for v = 0 and ProbeConstruction if Gaussian
/// resampling is exhausted.
ProbeSet build_probe_set(const Vector& value_vector, ProbeScheme scheme, std::uint64_t seed = 0,
                         double zero_threshold = kZeroThreshold);

/// t = u^T w_j from one query (more only if rescaling kicks in).
double measure_column_logit(ValueOracle& oracle, const Vector& value_vector, std::size_t column,
                            const Vector& probe, const LogitOptions& options = {},
                            LogitStats* stats = nullptr);

/// Recovers every column of W; d^2 queries. Throws IllConditioned when the
/// probe matrix condition estimate exceeds kMaxCondition.
Matrix recover_score_matrix(ValueOracle& oracle, const Vector& value_vector, const ProbeSet& probes,
                            const LogitOptions& options = {}, RecoveryReport* diagnostics = nullptr);

struct ExactConfig {
    ProbeScheme scheme = ProbeScheme::Deterministic;
    std::uint64_t probe_seed = 0;
    LogitOptions logit;
};

/// Both phases; d + d^2 queries when no probe needs rescaling.
RecoveryReport recover(ValueOracle& oracle, const ExactConfig& config = {});

} // namespace attnx::exact
