#include "attnx/error.hpp"
#include "attnx/matrix_sensing.hpp"
#include "attnx/random.hpp"
#include "reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace attnx;
using namespace attnx::sensing;

namespace {

RopSystem gaussian_system(Rng& rng, Eigen::Index m, Eigen::Index d1, Eigen::Index d2, const Matrix& truth) {
    RopSystem s{gaussian_matrix(rng, m, d1), gaussian_matrix(rng, m, d2), Vector()};
    s.measurements = apply_operator(s, truth);
    return s;
}

Matrix low_rank(Rng& rng, Eigen::Index d, Eigen::Index r) {
    return gaussian_matrix(rng, d, r) * gaussian_matrix(rng, d, r).transpose();
}

} // namespace

TEST_CASE("operator") {
    Rng rng(1);
    RopSystem s{gaussian_matrix(rng, 4, 3), gaussian_matrix(rng, 4, 3), Vector::Zero(4)};
    CHECK(apply_operator(s, Matrix::Zero(3, 3)).isZero(0.0));

    RopSystem pick{Matrix::Zero(1, 3), Matrix::Zero(1, 3), Vector::Zero(1)};
    pick.left(0, 1) = 1.0;
    pick.right(0, 2) = 1.0;
    const Matrix w = gaussian_matrix(rng, 3, 3);
    CHECK(apply_operator(pick, w)(0) == w(1, 2));

    const Matrix w5 = gaussian_matrix(rng, 5, 5);
    RopSystem ten{gaussian_matrix(rng, 10, 5), gaussian_matrix(rng, 10, 5), Vector::Zero(10)};
    const Vector t = apply_operator(ten, w5);
    for (Eigen::Index k = 0; k < 10; ++k) {
        const double want = static_cast<double>(ref::rop(ten.left.row(k).transpose(), ten.right.row(k).transpose(), w5));
        CHECK(std::abs(t(k) - want) <= 1e-12);
    }
}

TEST_CASE("adjoint") {
    Rng rng(2);
    RopSystem s{gaussian_matrix(rng, 6, 4), gaussian_matrix(rng, 6, 4), Vector::Zero(6)};
    CHECK(apply_adjoint(s, Vector::Zero(6)).isZero(0.0));

    RopSystem one{Matrix::Zero(1, 3), Matrix::Zero(1, 3), Vector::Zero(1)};
    one.left(0, 0) = 1.0;
    one.right(0, 1) = 1.0;
    Matrix want = Matrix::Zero(3, 3);
    want(0, 1) = 3.0;
    CHECK(apply_adjoint(one, Vector::Constant(1, 3.0)) == want);

    for (int trial = 0; trial < 100; ++trial) {
        RopSystem sys{gaussian_matrix(rng, 12, 5), gaussian_matrix(rng, 12, 4), Vector::Zero(12)};
        const Matrix w = gaussian_matrix(rng, 5, 4);
        const Vector z = gaussian_vector(rng, 12);
        const double lhs = apply_operator(sys, w).dot(z);
        const double rhs = (w.array() * apply_adjoint(sys, z).array()).sum();
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("singular value thresholding") {
    Rng rng(3);
    const Matrix m = gaussian_matrix(rng, 5, 4);
    CHECK((singular_value_threshold(m, 0.0) - m).norm() <= 1e-12);
    const double top = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    CHECK(singular_value_threshold(m, top).isZero(1e-12));
    CHECK(singular_value_threshold(m, 2.0 * top).isZero(0.0));

    const Matrix d31{{3.0, 0.0}, {0.0, 1.0}};
    const Matrix want{{1.0, 0.0}, {0.0, 0.0}};
    CHECK((singular_value_threshold(d31, 2.0) - want).norm() <= 1e-12);

    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = gaussian_matrix(rng, 4, 6), b = gaussian_matrix(rng, 4, 6);
        const double theta = std::abs(gaussian_vector(rng, 1)(0));
        CHECK((singular_value_threshold(a, theta) - singular_value_threshold(b, theta)).norm() <= (a - b).norm() + 1e-9);
    }
    CHECK_THROWS_AS(singular_value_threshold(m, -1.0), Error);
}

TEST_CASE("nuclear norm and rank") {
    CHECK(nuclear_norm(Matrix{{3.0, 0.0}, {0.0, -1.0}}) == doctest::Approx(4.0));
    Rng rng(4);
    CHECK(numerical_rank(low_rank(rng, 10, 3)) == 3);
    CHECK(numerical_rank(Matrix::Zero(4, 4)) == 0);
}

TEST_CASE("conjugate gradient") {
    Rng rng(5);
    const Matrix g = gaussian_matrix(rng, 8, 8);
    const Matrix spd = g * g.transpose() + Matrix::Identity(8, 8);
    const Vector b = gaussian_vector(rng, 8);
    const CgResult r = conjugate_gradient([&](const Vector& x) { return Vector(spd * x); }, b, 100, 1e-12);
    CHECK((spd * r.solution - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("nuclear-norm minimization") {
    Rng rng(6);
    SUBCASE("fully determined system returns the truth") {
        const Matrix truth = gaussian_matrix(rng, 4, 4);
        RopSystem s{Matrix::Zero(16, 4), Matrix::Zero(16, 4), Vector()};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                s.left(4 * i + j, i) = 1.0;
                s.right(4 * i + j, j) = 1.0;
            }
        s.measurements = apply_operator(s, truth);
        const SolveResult r = solve_nuclear_min(s);
        CHECK(r.diagnostics.converged);
        CHECK((r.estimate - truth).norm() <= 1e-6 * truth.norm());
    }
    SUBCASE("rank one, d = 20, m = 120") {
        const Matrix truth = low_rank(rng, 20, 1);
        const RopSystem s = gaussian_system(rng, 120, 20, 20, truth);
        const SolveResult r = solve_nuclear_min(s);
        CHECK(r.diagnostics.converged);
        CHECK((r.estimate - truth).norm() / truth.norm() <= 1e-4);
        CHECK(r.diagnostics.measurement_residual <= 1e-8);
        CHECK(nuclear_norm(r.estimate) <= nuclear_norm(truth) * (1.0 + 1e-6));
    }
    SUBCASE("conjugate gradient route agrees") {
        const Matrix truth = low_rank(rng, 12, 1);
        const RopSystem s = gaussian_system(rng, 72, 12, 12, truth);
        SolverConfig config;
        config.gram_solver = GramSolver::ConjugateGradient;
        const SolveResult r = solve_nuclear_min(s, config);
        CHECK(r.diagnostics.converged);
        CHECK((r.estimate - truth).norm() / truth.norm() <= 1e-4);
        CHECK(r.diagnostics.cg_iterations > 0);
    }
    SUBCASE("consistent underdetermined system is feasible at convergence") {
        const Matrix truth = gaussian_matrix(rng, 10, 10);
        const RopSystem s = gaussian_system(rng, 40, 10, 10, truth);
        const SolveResult r = solve_nuclear_min(s);
        CHECK(r.diagnostics.converged);
        const double residual = (apply_operator(s, r.estimate) - s.measurements).norm();
        CHECK(residual <= 1e-8 * std::max(1.0, s.measurements.norm()));
        CHECK(nuclear_norm(r.estimate) <= nuclear_norm(truth) * (1.0 + 1e-6));
    }
    SUBCASE("iteration cap reports non-convergence") {
        const Matrix truth = low_rank(rng, 10, 2);
        const RopSystem s = gaussian_system(rng, 50, 10, 10, truth);
        SolverConfig config;
        config.max_iters = 3;
        const SolveResult r = solve_nuclear_min(s, config);
        CHECK_FALSE(r.diagnostics.converged);
        CHECK(r.diagnostics.iterations == 3);
    }
}

TEST_CASE("system validation") {
    RopSystem bad{Matrix::Zero(3, 2), Matrix::Zero(2, 2), Vector::Zero(3)};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(solve_nuclear_min(bad), Error);
}

TEST_CASE("success is non-decreasing in the number of measurements") {
    const Eigen::Index d = 10, r = 1;
    int previous = -1;
    for (Eigen::Index factor : {1, 2, 4, 6}) {
        const Eigen::Index m = factor * r * d;
        int successes = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const Matrix truth = low_rank(rng, d, r);
            const RopSystem s = gaussian_system(rng, m, d, d, truth);
            SolverConfig config;
            config.max_iters = 2000;
            const SolveResult res = solve_nuclear_min(s, config);
            if ((res.estimate - truth).norm() / truth.norm() <= 1e-4) ++successes;
        }
        CHECK(successes >= previous);
        previous = successes;
    }
    CHECK(previous == 20);
}
