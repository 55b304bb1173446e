#pragma once

#include "attnx/model.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace attnx {

using Rng = std::mt19937_64;

/// Named sub-seed, so model / probe / noise streams vary independently.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

Vector gaussian_vector(Rng& rng, Eigen::Index n);
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);
Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi);
/// Uniform direction on the unit sphere.
Vector unit_vector(Rng& rng, Eigen::Index n);

/// Random sequence with N tokens and standard normal entries.
SequenceInput gaussian_sequence(Rng& rng, std::size_t length, std::size_t dim);

} // namespace attnx
