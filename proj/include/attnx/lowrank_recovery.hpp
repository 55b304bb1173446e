#pragma once

// Randomized d + m query extraction for rank(W) <= r. Each two-token query
// [(a + b)^T; b^T] yields one rank-one projection a^T W b; the projections are
// handed to the nuclear-norm solver.

#include "attnx/exact_recovery.hpp"
#include "attnx/matrix_sensing.hpp"
#include "attnx/oracle.hpp"
#include "attnx/report.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>

namespace attnx::lowrank {

struct LowRankConfig {
    std::size_t rank_bound = 1;
    double oversampling = 3.0; // C in m = ceil(C r 2d)
    std::uint64_t rng_seed = 0;
    sensing::SolverConfig solver;
    /// Known bound on ||W||_F; enables shrinking a before a query whose logit
    /// would saturate the sigmoid.
    std::optional<double> norm_bound;
    exact::LogitOptions logit;

    void validate() const;
};

/// m = ceil(C r 2d).
std::size_t measurement_count(std::size_t dim, const LowRankConfig& config);

/// One query, returns a^T W b. Same rejection and rescaling rules as the
/// dense column probe.
double rop_probe_logit(ValueOracle& oracle, const Vector& value_vector, const Vector& a, const Vector& b,
                       const exact::LogitOptions& options = {}, exact::LogitStats* stats = nullptr);

/// d + m queries on the low-rank path. Falls back to dense exact recovery
/// when m >= d^2. Solver non-convergence is reported via `converged`.
RecoveryReport recover_lowrank(ValueOracle& oracle, const LowRankConfig& config);

} // namespace attnx::lowrank
