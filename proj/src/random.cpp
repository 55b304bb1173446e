#include "attnx/random.hpp"

namespace attnx {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

Vector gaussian_vector(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> normal;
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = normal(rng);
    return out;
}

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    return out;
}

Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    std::uniform_real_distribution<double> uniform(lo, hi);
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = uniform(rng);
    return out;
}

Vector unit_vector(Rng& rng, Eigen::Index n) {
    Vector v;
    do {
        v = gaussian_vector(rng, n);
    } while (v.norm() < 1e-12);
    return v.normalized();
}

SequenceInput gaussian_sequence(Rng& rng, std::size_t length, std::size_t dim) {
    return SequenceInput(gaussian_matrix(rng, static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(dim)));
}

} // namespace attnx
