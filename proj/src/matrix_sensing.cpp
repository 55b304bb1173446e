#include "attnx/matrix_sensing.hpp"

#include "attnx/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace attnx::sensing {

namespace {

using Svd = Eigen::BDCSVD<Eigen::MatrixXd>;

Svd decompose(const Matrix& m, unsigned options) {
    Svd svd(m, options);
    if (svd.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "SVD failed to converge");
    return svd;
}

// Projection onto the affine set {W : A(W) = t}.
class AffineProjector {
public:
    AffineProjector(const RopSystem& system, const SolverConfig& config)
        : system_(system), config_(config) {
        if (config.gram_solver == GramSolver::Cholesky) {
            const Matrix gram = ((system.left * system.left.transpose()).array() *
                                 (system.right * system.right.transpose()).array())
                                    .matrix();
            llt_.compute(gram);
            if (llt_.info() == Eigen::Success) {
                // Reject factorizations of numerically singular Gram matrices.
                const auto diag = llt_.matrixLLT().diagonal();
                use_cholesky_ = diag.minCoeff() > 1e-7 * diag.maxCoeff();
            }
        }
    }

    Matrix project(const Matrix& point, const Vector& target) {
        const Vector residual = apply_operator(system_, point) - target;
        Vector multipliers;
        if (use_cholesky_) {
            multipliers = llt_.solve(residual);
        } else {
            auto gram = [this](const Vector& z) { return apply_operator(system_, apply_adjoint(system_, z)); };
            CgResult cg = conjugate_gradient(gram, residual, config_.cg_max_iters, config_.cg_tol);
            cg_iterations_ += static_cast<std::size_t>(cg.iterations);
            multipliers = std::move(cg.solution);
        }
        return point - apply_adjoint(system_, multipliers);
    }

    std::size_t cg_iterations() const { return cg_iterations_; }

private:
    const RopSystem& system_;
    const SolverConfig& config_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    bool use_cholesky_ = false;
    std::size_t cg_iterations_ = 0;
};

// SVT through the eigendecomposition of the smaller Gram matrix M^T M (or
// M M^T). Used inside the ADMM loop; singular values at or below theta are
// dropped, so squaring only costs accuracy where it no longer matters.
Matrix gram_threshold(const Matrix& m, double theta) {
    const bool tall = m.rows() >= m.cols();
    const Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(m.transpose() * m) : Eigen::MatrixXd(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "eigensolver failed to converge");
    const Eigen::VectorXd sigma = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::Index first = sigma.size();
    while (first > 0 && sigma(first - 1) > theta) --first;
    const Eigen::Index keep = sigma.size() - first;
    if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
    const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(keep);
    const Eigen::VectorXd ratio =
        (sigma.tail(keep).array() - theta).matrix().cwiseQuotient(sigma.tail(keep));
    if (tall) return (m * basis) * ratio.asDiagonal() * basis.transpose();
    return basis * ratio.asDiagonal() * (basis.transpose() * m);
}

} // namespace

void RopSystem::validate() const {
    if (left.rows() < 1) throw Error(ErrorKind::InvalidInput, "ROP system needs at least one measurement");
    if (right.rows() != left.rows() || measurements.size() != left.rows())
        throw Error(ErrorKind::Shape, "ROP system pair/measurement counts disagree");
    if (!left.allFinite() || !right.allFinite() || !measurements.allFinite())
        throw Error(ErrorKind::InvalidInput, "ROP system entries must be finite");
}

void SolverConfig::validate() const {
    if (!(rho > 0.0)) throw Error(ErrorKind::InvalidInput, "rho must be positive");
    if (max_iters < 1) throw Error(ErrorKind::InvalidInput, "max_iters must be >= 1");
    if (!(primal_tol > 0.0) || !(dual_tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerances must be positive");
}

Vector apply_operator(const RopSystem& system, const Matrix& w) {
    if (static_cast<std::size_t>(w.rows()) != system.rows() || static_cast<std::size_t>(w.cols()) != system.cols())
        throw Error(ErrorKind::Shape, "matrix shape does not match the ROP system");
    return ((system.left * w).array() * system.right.array()).rowwise().sum().matrix();
}

Matrix apply_adjoint(const RopSystem& system, const Vector& z) {
    if (static_cast<std::size_t>(z.size()) != system.size())
        throw Error(ErrorKind::Shape, "adjoint input length does not match the measurement count");
    return system.left.transpose() * z.asDiagonal() * system.right;
}

Matrix singular_value_threshold(const Matrix& m, double theta) {
    if (!(theta >= 0.0)) throw Error(ErrorKind::InvalidInput, "threshold must be nonnegative");
    if (theta == 0.0) return m;
    const Svd svd = decompose(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd shrunk = (svd.singularValues().array() - theta).max(0.0).matrix();
    Eigen::Index keep = 0;
    while (keep < shrunk.size() && shrunk(keep) > 0.0) ++keep;
    if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
           svd.matrixV().leftCols(keep).transpose();
}

double nuclear_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return decompose(m, 0).singularValues().sum();
}

std::size_t numerical_rank(const Matrix& m, double relative_cutoff) {
    if (m.size() == 0) return 0;
    const Eigen::VectorXd s = decompose(m, 0).singularValues();
    if (s(0) == 0.0) return 0;
    return static_cast<std::size_t>((s.array() > relative_cutoff * s(0)).count());
}

CgResult conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                            int max_iters, double tol) {
    CgResult out;
    out.solution = Vector::Zero(rhs.size());
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return out;
    Vector r = rhs;
    Vector p = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < max_iters; ++it) {
        if (std::sqrt(rr) <= tol * rhs_norm) break;
        const Vector ap = apply(p);
        const double curvature = p.dot(ap);
        if (!(curvature > 0.0)) break;
        const double step = rr / curvature;
        out.solution += step * p;
        r -= step * ap;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        out.iterations = it + 1;
    }
    out.relative_residual = std::sqrt(rr) / rhs_norm;
    return out;
}

SolveResult solve_nuclear_min(const RopSystem& system, const SolverConfig& config) {
    system.validate();
    config.validate();

    SolveResult result;
    const auto d1 = static_cast<Eigen::Index>(system.rows());
    const auto d2 = static_cast<Eigen::Index>(system.cols());
    const double t_norm = system.measurements.norm();
    if (t_norm == 0.0) {
        result.estimate = Matrix::Zero(d1, d2);
        result.diagnostics.converged = true;
        return result;
    }

    // Solve at unit measurement scale; ADMM with a fixed rho is not scale-free.
    const double scale = t_norm / std::sqrt(static_cast<double>(system.size()));
    const Vector target = system.measurements / scale;
    double rho = config.rho;

    AffineProjector projector(system, config);
    Matrix w = Matrix::Zero(d1, d2);
    Matrix z = Matrix::Zero(d1, d2);
    Matrix u = Matrix::Zero(d1, d2); // scaled dual, Y = rho * U
    auto& diag = result.diagnostics;

    for (int it = 1; it <= config.max_iters; ++it) {
        w = projector.project(z - u, target);
        const Matrix z_prev = z;
        z = gram_threshold(w + u, 1.0 / rho);
        u += w - z;

        diag.iterations = it;
        diag.primal_residual = (w - z).norm() / std::max(1.0, z.norm());
        diag.dual_residual = rho * (z - z_prev).norm() / std::max(1.0, rho * u.norm());
        if (diag.primal_residual < config.primal_tol && diag.dual_residual < config.dual_tol) {
            diag.converged = true;
            break;
        }
        // Residual balancing; the scaled dual is rescaled to keep Y = rho U fixed.
        if (config.adaptive_rho && it % 10 == 0) {
            if (diag.primal_residual > 10.0 * diag.dual_residual) {
                rho *= 2.0;
                u /= 2.0;
            } else if (diag.dual_residual > 10.0 * diag.primal_residual) {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    result.estimate = w * scale;
    diag.measurement_residual =
        (apply_operator(system, result.estimate) - system.measurements).norm() / std::max(1.0, t_norm);
    diag.numerical_rank = numerical_rank(result.estimate);
    diag.nuclear_norm = nuclear_norm(result.estimate);
    diag.cg_iterations = projector.cg_iterations();
    diag.final_rho = rho;
    return result;
}

} // namespace attnx::sensing
