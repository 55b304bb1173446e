#pragma once

// Rank-one projection (ROP) measurement operators and an ADMM solver for
//
//     minimize ||W||_*  subject to  a_k^T W b_k = t_k,  k = 1..m.
//
// Nothing here knows about attention; the low-rank learner feeds it.

#include "attnx/model.hpp"

#include <cstddef>
#include <functional>
#include <optional>

namespace attnx::sensing {

/// m measurement pairs stored as the rows of `left` (a_k) and `right` (b_k).
/// The sensing matrices a_k b_k^T are never formed.
struct RopSystem {
    Matrix left;         // m x d1
    Matrix right;        // m x d2
    Vector measurements; // m

    std::size_t size() const { return static_cast<std::size_t>(left.rows()); }
    std::size_t rows() const { return static_cast<std::size_t>(left.cols()); }
    std::size_t cols() const { return static_cast<std::size_t>(right.cols()); }
    /// Throws Shape / InvalidInput on inconsistent or non-finite data.
    void validate() const;
};

enum class GramSolver {
    Cholesky,          // factor the m x m Gram matrix once; CG fallback if not PD
    ConjugateGradient, // CG on the normal equations every iteration
};

struct SolverConfig {
    double rho = 1.0; // initial penalty
    bool adaptive_rho = true;
    int max_iters = 5000;
    double primal_tol = 1e-8;
    double dual_tol = 1e-8;
    std::optional<std::size_t> rank_hint;
    GramSolver gram_solver = GramSolver::Cholesky;
    int cg_max_iters = 200;
    double cg_tol = 1e-10;

    void validate() const;
};

struct SolverDiagnostics {
    bool converged = false;
    int iterations = 0;
    double primal_residual = 0.0;      // ||W - Z||_F relative to max(1, ||Z||_F)
    double dual_residual = 0.0;        // rho ||Z - Z_prev||_F relative to max(1, ||Y||_F)
    double measurement_residual = 0.0; // ||A(W) - t||_2 / max(1, ||t||_2)
    std::size_t numerical_rank = 0;
    double nuclear_norm = 0.0;
    std::size_t cg_iterations = 0;
    double final_rho = 0.0;
};

struct SolveResult {
    Matrix estimate;
    SolverDiagnostics diagnostics;
};

/// (a_k^T W b_k)_k, O(d1 d2) per measurement.
Vector apply_operator(const RopSystem& system, const Matrix& w);
/// sum_k z_k a_k b_k^T.
Matrix apply_adjoint(const RopSystem& system, const Vector& z);

/// U max(S - theta, 0) V^T. Throws InvalidInput for theta < 0, Numerical if the
/// SVD fails.
Matrix singular_value_threshold(const Matrix& m, double theta);

double nuclear_norm(const Matrix& m);
/// Count of singular values above relative_cutoff * sigma_max.
std::size_t numerical_rank(const Matrix& m, double relative_cutoff = 1e-8);

struct CgResult {
    Vector solution;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Conjugate gradient for a symmetric positive (semi)definite operator.
CgResult conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                            int max_iters, double tol);

/// ADMM with a nuclear-norm splitting variable. Never throws on
/// non-convergence; check diagnostics.converged.
SolveResult solve_nuclear_min(const RopSystem& system, const SolverConfig& config = {});

} // namespace attnx::sensing
