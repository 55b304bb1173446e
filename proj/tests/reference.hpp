#pragma once

// Independent evaluators used as test oracles. They share only the storage
// types with the library and compute everything with plain loops in long
// double.

#include "attnx/model.hpp"

#include <cmath>
#include <vector>

namespace ref {

using attnx::Matrix;
using attnx::Vector;

inline std::vector<long double> softmax(const std::vector<long double>& s) {
    long double top = s[0];
    for (long double x : s) top = std::max(top, x);
    long double z = 0;
    std::vector<long double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) z += out[i] = std::exp(s[i] - top);
    for (auto& x : out) x /= z;
    return out;
}

// s_i = x_i^T W x_N by a triple loop.
inline std::vector<long double> scores(const Matrix& w, const Matrix& x) {
    const auto n = x.rows(), d = x.cols();
    std::vector<long double> s(static_cast<std::size_t>(n), 0.0L);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                s[static_cast<std::size_t>(i)] +=
                    static_cast<long double>(x(i, a)) * w(a, b) * static_cast<long double>(x(n - 1, b));
    return s;
}

inline long double attention(const Matrix& w, const Vector& v, const Matrix& x) {
    const auto alpha = softmax(scores(w, x));
    long double out = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        long double xv = 0;
        for (Eigen::Index a = 0; a < x.cols(); ++a) xv += static_cast<long double>(x(i, a)) * v(a);
        out += alpha[static_cast<std::size_t>(i)] * xv;
    }
    return out;
}

inline long double transformer(const Matrix& w, const Matrix& a, const Vector& wo, const Matrix& x) {
    const auto alpha = softmax(scores(w, x));
    std::vector<long double> pooled(static_cast<std::size_t>(x.cols()), 0.0L);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index k = 0; k < x.cols(); ++k)
            pooled[static_cast<std::size_t>(k)] += alpha[static_cast<std::size_t>(i)] * x(i, k);
    long double out = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        long double h = 0;
        for (Eigen::Index k = 0; k < a.rows(); ++k) h += pooled[static_cast<std::size_t>(k)] * a(k, j);
        out += wo(j) * std::max(h, 0.0L);
    }
    return out;
}

// <a b^T, W> = trace((a b^T)^T W) through an explicitly materialized outer product.
inline long double rop(const Vector& a, const Vector& b, const Matrix& w) {
    Matrix outer(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) outer(i, j) = a(i) * b(j);
    long double trace = 0;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) trace += static_cast<long double>(outer(i, j)) * w(i, j);
    return trace;
}

inline long double sigmoid(long double t) { return 1.0L / (1.0L + std::exp(-t)); }

} // namespace ref
