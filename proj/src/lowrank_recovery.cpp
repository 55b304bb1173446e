#include "attnx/lowrank_recovery.hpp"

#include "attnx/error.hpp"
#include "attnx/random.hpp"

#include <cmath>

namespace attnx::lowrank {

void LowRankConfig::validate() const {
    if (rank_bound < 1) throw Error(ErrorKind::InvalidInput, "rank bound must be >= 1");
    if (!(oversampling > 0.0)) throw Error(ErrorKind::InvalidInput, "oversampling constant must be positive");
    if (norm_bound && !(*norm_bound > 0.0)) throw Error(ErrorKind::InvalidInput, "norm bound must be positive");
    solver.validate();
}

std::size_t measurement_count(std::size_t dim, const LowRankConfig& config) {
    const double m = std::ceil(config.oversampling * static_cast<double>(config.rank_bound) * 2.0 *
                               static_cast<double>(dim));
    return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

double rop_probe_logit(ValueOracle& oracle, const Vector& value_vector, const Vector& a, const Vector& b,
                       const exact::LogitOptions& options, exact::LogitStats* stats) {
    return exact::probe_logit(oracle, value_vector, a, b, options, stats);
}

RecoveryReport recover_lowrank(ValueOracle& oracle, const LowRankConfig& config) {
    config.validate();
    const std::size_t d = oracle.dim();
    const std::size_t m = measurement_count(d, config);

    if (m >= d * d) {
        RecoveryReport report = exact::recover(oracle, {exact::ProbeScheme::Deterministic, 0, config.logit});
        report.diagnostics["dense_fallback"] = 1.0;
        report.diagnostics["measurements"] = static_cast<double>(d * d);
        return report;
    }

    Stopwatch clock;
    RecoveryReport report;
    const std::size_t start = oracle.query_count();

    report.value_vector = exact::recover_value_vector(oracle);
    const double v_norm = report.value_vector.norm();
    if (!(report.value_vector.cwiseAbs().maxCoeff() > config.logit.zero_threshold))
        throw Error(ErrorKind::NonIdentifiable, "value vector is zero, so the model is identically zero");

    // Largest logit magnitude that keeps the weight away from saturation.
    const double logit_limit = logit(1.0 - config.logit.saturation);

    Rng rng(config.rng_seed);
    sensing::RopSystem system;
    const auto dd = static_cast<Eigen::Index>(d);
    system.left.resize(static_cast<Eigen::Index>(m), dd);
    system.right.resize(static_cast<Eigen::Index>(m), dd);
    system.measurements.resize(static_cast<Eigen::Index>(m));

    exact::LogitStats stats;
    std::size_t resampled = 0;
    std::size_t shrunk = 0;
    for (std::size_t k = 0; k < m; ++k) {
        Vector a = gaussian_vector(rng, dd);
        const Vector b = gaussian_vector(rng, dd);
        // Pre-query resampling keeps the query count at d + m.
        while (std::abs(a.dot(report.value_vector)) <= 1e-9 * a.norm() * v_norm) {
            a = gaussian_vector(rng, dd);
            ++resampled;
        }
        if (config.norm_bound) {
            double predicted = a.norm() * b.norm() * *config.norm_bound;
            while (predicted > logit_limit) {
                a /= 2.0;
                predicted /= 2.0;
                ++shrunk;
            }
        }
        const auto row = static_cast<Eigen::Index>(k);
        system.left.row(row) = a.transpose();
        system.right.row(row) = b.transpose();
        system.measurements(row) = rop_probe_logit(oracle, report.value_vector, a, b, config.logit, &stats);
    }

    sensing::SolveResult solved = sensing::solve_nuclear_min(system, config.solver);
    report.score_matrix = std::move(solved.estimate);
    report.converged = solved.diagnostics.converged;

    auto& diag = report.diagnostics;
    diag["measurements"] = static_cast<double>(m);
    diag["solver_iterations"] = solved.diagnostics.iterations;
    diag["solver_primal_residual"] = solved.diagnostics.primal_residual;
    diag["solver_dual_residual"] = solved.diagnostics.dual_residual;
    diag["measurement_residual"] = solved.diagnostics.measurement_residual;
    diag["numerical_rank"] = static_cast<double>(solved.diagnostics.numerical_rank);
    diag["nuclear_norm"] = solved.diagnostics.nuclear_norm;
    diag["probe_resamples"] = static_cast<double>(resampled);
    diag["probe_shrinks"] = static_cast<double>(shrunk);
    diag["probe_rescales"] = static_cast<double>(stats.rescales);
    diag["max_abs_logit"] = stats.max_abs_logit;

    report.queries_used = oracle.query_count() - start;
    report.elapsed = clock.elapsed();
    return report;
}

} // namespace attnx::lowrank
