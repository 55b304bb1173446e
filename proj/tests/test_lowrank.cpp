#include "attnx/error.hpp"
#include "attnx/lowrank_recovery.hpp"
#include "attnx/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace attnx;
using namespace attnx::lowrank;

namespace {

AttentionParams low_rank_attention(Rng& rng, Eigen::Index d, Eigen::Index r) {
    return {gaussian_matrix(rng, d, r) * gaussian_matrix(rng, d, r).transpose() / static_cast<double>(d),
            unit_vector(rng, d)};
}

} // namespace

TEST_CASE("rank-one projection probe") {
    Rng rng(1);
    auto zero = OracleSession::exact(AttentionParams{Matrix::Zero(4, 4), unit_vector(rng, 4)});
    const Vector v0 = exact::recover_value_vector(zero);
    CHECK(std::abs(rop_probe_logit(zero, v0, gaussian_vector(rng, 4), gaussian_vector(rng, 4))) <= 1e-14);

    const AttentionParams p = low_rank_attention(rng, 5, 2);
    auto session = OracleSession::exact(p);
    const Vector v = exact::recover_value_vector(session);
    CHECK(rop_probe_logit(session, v, Vector::Unit(5, 1), Vector::Unit(5, 3)) ==
          doctest::Approx(p.score_matrix(1, 3)).epsilon(1e-9));

    const Vector x = gaussian_vector(rng, 6), y = gaussian_vector(rng, 6);
    const AttentionParams r1{x * y.transpose() / 6.0, unit_vector(rng, 6)};
    auto r1_session = OracleSession::exact(r1);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector a = gaussian_vector(rng, 6), b = gaussian_vector(rng, 6);
        CHECK(std::abs(rop_probe_logit(r1_session, r1.value_vector, a, b) - a.dot(x) * y.dot(b) / 6.0) <= 1e-9);
    }
}

TEST_CASE("measurement count") {
    LowRankConfig c;
    c.rank_bound = 2;
    c.oversampling = 3.0;
    CHECK(measurement_count(40, c) == 480);
    c.rank_bound = 1;
    CHECK(measurement_count(64, c) == 384);
    c.oversampling = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("low-rank recovery") {
    Rng rng(2);
    SUBCASE("d = 40, r = 2, C = 3") {
        const AttentionParams p = low_rank_attention(rng, 40, 2);
        auto session = OracleSession::exact(p);
        LowRankConfig c;
        c.rank_bound = 2;
        c.rng_seed = 5;
        RecoveryReport report = recover_lowrank(session, c);
        report.compare_with(p);
        CHECK(report.converged);
        CHECK(report.queries_used == 40 + 480);
        CHECK(*report.frobenius_error / p.score_matrix.norm() <= 1e-4);
        CHECK(report.diagnostics.at("numerical_rank") <= 2);
        Rng check(3);
        for (int k = 0; k < 200; ++k) {
            const SequenceInput x = gaussian_sequence(check, 1 + k % 5, 40);
            CHECK(std::abs(attention_forward(report.attention(), x) - attention_forward(p, x)) <= 1e-6);
        }
    }
    SUBCASE("d = 64, r = 1 accounting") {
        const AttentionParams p = low_rank_attention(rng, 64, 1);
        auto session = OracleSession::exact(p);
        LowRankConfig c;
        c.rank_bound = 1;
        RecoveryReport report = recover_lowrank(session, c);
        report.compare_with(p);
        CHECK(report.queries_used == 448);
        CHECK(*report.frobenius_error / p.score_matrix.norm() <= 1e-4);
    }
    SUBCASE("dense fallback") {
        const AttentionParams p{uniform_matrix(rng, 4, 4, -2, 2), unit_vector(rng, 4)};
        auto session = OracleSession::exact(p);
        LowRankConfig c;
        c.rank_bound = 4;
        RecoveryReport report = recover_lowrank(session, c);
        report.compare_with(p);
        CHECK(report.diagnostics.at("dense_fallback") == 1.0);
        CHECK(report.queries_used == 20);
        CHECK(*report.frobenius_error <= 1e-9);
    }
    SUBCASE("zero value vector") {
        auto session = OracleSession::exact(AttentionParams{Matrix::Zero(10, 10), Vector::Zero(10)});
        LowRankConfig c;
        CHECK_THROWS_AS(recover_lowrank(session, c), Error);
        CHECK(session.query_count() == 10);
    }
    SUBCASE("seeded runs repeat") {
        const AttentionParams p = low_rank_attention(rng, 12, 1);
        LowRankConfig c;
        c.rng_seed = 77;
        auto s1 = OracleSession::exact(p);
        auto s2 = OracleSession::exact(p);
        CHECK(recover_lowrank(s1, c).score_matrix == recover_lowrank(s2, c).score_matrix);
    }
}
