#include "attnx/error.hpp"
#include "attnx/oracle.hpp"
#include "attnx/random.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace attnx;

namespace {

AttentionParams random_attention(Rng& rng, Eigen::Index d) {
    return {uniform_matrix(rng, d, d, -2, 2), unit_vector(rng, d)};
}

} // namespace

TEST_CASE("exact session") {
    Rng rng(1);
    const AttentionParams p = random_attention(rng, 4);
    auto session = OracleSession::exact(p);
    CHECK(session.query_count() == 0);
    CHECK(session.vq(SequenceInput::single(Vector::Unit(4, 0))) == p.value_vector(0));

    const SequenceInput x = gaussian_sequence(rng, 3, 4);
    const double first = session.vq(x);
    const double second = session.vq(x);
    CHECK(std::memcmp(&first, &second, sizeof(double)) == 0);
    CHECK(session.query_count() == 3);
    CHECK(first == attention_forward(p, x));

    CHECK_THROWS_AS(session.avq(x, 0.1), Error);
    CHECK_THROWS_AS(session.vq(gaussian_sequence(rng, 2, 3)), Error);
}

TEST_CASE("noise policies") {
    const AttentionParams p{Matrix::Zero(2, 2), Vector{{0.234, -0.5}}};
    const SequenceInput e1 = SequenceInput::single(Vector::Unit(2, 0));

    auto zero = OracleSession::approximate(p, NoisePolicy::zero(), 0.0);
    CHECK(zero.avq(e1, 0.1) == 0.234);

    auto quant = OracleSession::approximate(p, NoisePolicy::quantize(), 0.0);
    CHECK(quant.avq(e1, 0.1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(quant.avq(e1, 0.0) == 0.234);

    auto hash = OracleSession::approximate(p, NoisePolicy::hash_sign(99), 0.0);
    const double a = hash.avq(e1, 0.01);
    const double b = hash.avq(e1, 0.01);
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
    CHECK(std::abs(a - 0.234) <= 0.01);
    CHECK(std::abs(a - 0.234) >= 0.01 * (1.0 - 1e-4));
    CHECK_THROWS_AS(hash.vq(e1), Error);
}

TEST_CASE("tolerance floor") {
    const AttentionParams p{Matrix::Zero(2, 2), Vector{{1.0, 0.0}}};
    auto session = OracleSession::approximate(p, NoisePolicy::quantize(), 1e-3);
    CHECK_THROWS_AS(session.avq(SequenceInput::single(Vector::Unit(2, 0)), 1e-4), Error);
    CHECK_NOTHROW(session.avq(SequenceInput::single(Vector::Unit(2, 0)), 1e-3));
    try {
        session.avq(SequenceInput::single(Vector::Unit(2, 0)), 1e-5);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ToleranceUnsatisfiable);
    }
}

TEST_CASE("AVQ contract holds for every policy") {
    Rng rng(2024);
    std::uniform_real_distribution<double> log_tau(-8.0, 0.0);
    const NoisePolicy policies[] = {NoisePolicy::zero(), NoisePolicy::quantize(), NoisePolicy::hash_sign(5)};
    for (const NoisePolicy& policy : policies) {
        for (int trial = 0; trial < 1000; ++trial) {
            const auto d = static_cast<Eigen::Index>(1 + trial % 8);
            const AttentionParams p = random_attention(rng, d);
            auto session = OracleSession::approximate(p, policy, 0.0);
            const SequenceInput x = gaussian_sequence(rng, 1 + trial % 6, static_cast<std::size_t>(d));
            const double tau = std::pow(10.0, log_tau(rng));
            const double truth = attention_forward(p, x);
            const double got = session.avq(x, tau);
            CHECK(std::abs(got - truth) <= tau);
            const double again = session.avq(x, tau);
            CHECK(std::memcmp(&got, &again, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("canonical bytes are exact bit patterns") {
    const SequenceInput a(Matrix{{0.0, 1.0}});
    const SequenceInput b(Matrix{{-0.0, 1.0}});
    CHECK(canonical_bytes(a) != canonical_bytes(b));
    CHECK(canonical_bytes(a) == canonical_bytes(SequenceInput(Matrix{{0.0, 1.0}})));
    CHECK(canonical_bytes(a).size() == 2 * 8 + 2 * 8);
}

TEST_CASE("recording oracle") {
    Rng rng(4);
    auto session = OracleSession::exact(random_attention(rng, 3));
    RecordingOracle rec(session);
    const SequenceInput x = gaussian_sequence(rng, 2, 3);
    const double y = rec.value(x);
    REQUIRE(rec.transcript().size() == 1);
    CHECK(rec.transcript()[0].first == x.rows());
    CHECK(rec.transcript()[0].second == y);
    CHECK(rec.query_count() == 1);
}

TEST_CASE("noise policy names") {
    CHECK(parse_noise_variant("quantize") == NoisePolicy::Variant::Quantize);
    CHECK(parse_noise_variant("hashsign") == NoisePolicy::Variant::HashSign);
    CHECK(parse_noise_variant("zero") == NoisePolicy::Variant::Zero);
    CHECK_THROWS_AS(parse_noise_variant("gaussian"), Error);
    CHECK(to_string(NoisePolicy::Variant::HashSign) == "hashsign");
}
