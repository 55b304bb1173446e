#include "attnx/error.hpp"
#include "attnx/model.hpp"
#include "attnx/random.hpp"
#include "reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace attnx;

TEST_CASE("softmax hand values") {
    const Vector half = softmax(Vector::Zero(2));
    CHECK(half(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half(1) == doctest::Approx(0.5).epsilon(1e-15));
    for (double t : {-700.0, -3.0, 0.0, 12.5, 700.0}) CHECK(softmax(Vector::Constant(1, t))(0) == 1.0);

    const Vector got = softmax(Vector{{1.0, 2.0, 3.0}});
    const auto want = ref::softmax({1.0L, 2.0L, 3.0L});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(got(i) - static_cast<double>(want[static_cast<std::size_t>(i)])) <= 1e-16);
}

TEST_CASE("softmax survives large scores") {
    const Vector p = softmax(Vector{{700.0, -700.0, 699.0}});
    CHECK(p.allFinite());
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("attention scores") {
    const Matrix x{{1.0, 0.0}, {1.0, 0.0}};
    const Vector s = attention_scores(Matrix::Identity(2, 2), SequenceInput(x));
    CHECK(s(0) == 1.0);
    CHECK(s(1) == 1.0);
    CHECK(attention_scores(Matrix::Zero(2, 2), SequenceInput(x)).isZero(0.0));

    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix w = gaussian_matrix(rng, 3, 3);
        const SequenceInput seq = gaussian_sequence(rng, 2, 3);
        const Vector got = attention_scores(w, seq);
        const auto want = ref::scores(w, seq.rows());
        for (int i = 0; i < 2; ++i) CHECK(std::abs(got(i) - static_cast<double>(want[static_cast<std::size_t>(i)])) <= 1e-13);
    }
}

TEST_CASE("attention forward hand values") {
    Rng rng(3);
    const Matrix w = gaussian_matrix(rng, 4, 4);
    const Vector v = gaussian_vector(rng, 4);
    for (int i = 0; i < 4; ++i) CHECK(attention_forward({w, v}, SequenceInput::single(Vector::Unit(4, i))) == v(i));

    const SequenceInput x = gaussian_sequence(rng, 5, 4);
    const double mean = (x.rows() * v).mean();
    CHECK(attention_forward({Matrix::Zero(4, 4), v}, x) == doctest::Approx(mean).epsilon(1e-14));

    // s = [1, 0], weight sigma(1) on the first row.
    const AttentionParams p{Matrix{{0.0, 1.0}, {1.0, 0.0}}, Vector{{1.0, 2.0}}};
    const long double alpha = ref::sigmoid(1.0L);
    const double want = static_cast<double>(alpha * 1.0L + (1.0L - alpha) * 2.0L);
    CHECK(std::abs(attention_forward(p, SequenceInput(Matrix::Identity(2, 2))) - want) <= 1e-15);
}

TEST_CASE("transformer and multihead forward") {
    Rng rng(5);
    TransformerParams tf{gaussian_matrix(rng, 2, 2), gaussian_matrix(rng, 2, 2), gaussian_vector(rng, 2)};
    for (int trial = 0; trial < 20; ++trial) {
        const SequenceInput x = gaussian_sequence(rng, 1 + trial % 4, 2);
        const double want = static_cast<double>(ref::transformer(tf.score_matrix, tf.hidden_matrix, tf.output_vector, x.rows()));
        CHECK(std::abs(transformer_forward(tf, x) - want) <= 1e-13);
    }
    const Vector x1 = gaussian_vector(rng, 2);
    CHECK(transformer_forward(tf, SequenceInput::single(x1)) ==
          doctest::Approx(tf.output_vector.dot((tf.hidden_matrix.transpose() * x1).cwiseMax(0.0))).epsilon(1e-14));
    TransformerParams silent = tf;
    silent.output_vector.setZero();
    CHECK(transformer_forward(silent, gaussian_sequence(rng, 3, 2)) == 0.0);

    const AttentionParams h1{gaussian_matrix(rng, 4, 4), gaussian_vector(rng, 4)};
    const AttentionParams h2{gaussian_matrix(rng, 4, 4), gaussian_vector(rng, 4)};
    const SequenceInput x = gaussian_sequence(rng, 3, 4);
    CHECK(multihead_forward({{h1}}, x) == attention_forward(h1, x));
    CHECK(multihead_forward({{h1, h2}}, x) == doctest::Approx(attention_forward(h1, x) + attention_forward(h2, x)).epsilon(1e-14));
    CHECK(multihead_forward({{{h1.score_matrix, Vector::Zero(4)}, {h2.score_matrix, Vector::Zero(4)}}}, x) == 0.0);
}

TEST_CASE("forward matches the long double evaluator") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + trial % 6;
        const AttentionParams p{uniform_matrix(rng, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), -2, 2),
                                gaussian_vector(rng, static_cast<Eigen::Index>(d))};
        const SequenceInput x = gaussian_sequence(rng, 1 + trial % 5, d);
        const double want = static_cast<double>(ref::attention(p.score_matrix, p.value_vector, x.rows()));
        CHECK(std::abs(attention_forward(p, x) - want) <= 1e-12 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("model invariants") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix w = gaussian_matrix(rng, 4, 4);
        const SequenceInput x = gaussian_sequence(rng, 1 + trial % 5, 4);
        CHECK((attention_scores(w, x) - attention_scores(w, x.negated())).cwiseAbs().maxCoeff() <= 1e-12);

        const Vector v = gaussian_vector(rng, 4);
        const SequenceInput one = gaussian_sequence(rng, 1, 4);
        CHECK(std::abs(attention_forward({w, v}, one) - attention_forward({gaussian_matrix(rng, 4, 4), v}, one)) <= 1e-14);

        const double bound = (x.rows() * v).cwiseAbs().maxCoeff();
        CHECK(std::abs(attention_forward({w, v}, x)) <= bound + 1e-15);

        const Vector lambda{{0.2, 0.5, 0.3}};
        MultiHeadParams mh;
        for (int h = 0; h < 3; ++h) mh.heads.push_back({w, lambda(h) * v});
        CHECK(std::abs(multihead_forward(mh, x) - attention_forward({w, v}, x)) <= 1e-12);
    }
}

TEST_CASE("sigmoid and logit") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(logit(0.5) == 0.0);
    for (double t : {-30.0, -1.0, -1e-3, 0.25, 2.0, 10.0}) CHECK(logit(sigmoid(t)) == doctest::Approx(t).epsilon(1e-9));
    CHECK(std::isfinite(sigmoid(-800.0)));
    CHECK(std::abs(sigmoid(0.7) - static_cast<double>(ref::sigmoid(0.7L))) <= 1e-16);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(SequenceInput(Matrix(0, 3)), Error);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = NAN;
    CHECK_THROWS_AS(SequenceInput{bad}, Error);
    const AttentionParams mismatched{Matrix::Zero(3, 3), Vector::Zero(2)};
    CHECK_THROWS_AS(mismatched.validate(), Error);
    const AttentionParams p{Matrix::Zero(3, 3), Vector::Zero(3)};
    CHECK_THROWS_AS(attention_forward(p, SequenceInput(Matrix::Zero(2, 2))), Error);
}
