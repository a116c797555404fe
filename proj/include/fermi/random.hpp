#pragma once

#include <cstdint>
#include <random>

#include "fermi/selfdual.hpp"

namespace fermi {

using Rng = std::mt19937_64;

inline cplx gaussian_c(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

inline Mat random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat X(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) X(i, j) = gaussian_c(rng);
  return X;
}

inline Vec random_vector(Rng& rng, Eigen::Index n) { return random_matrix(rng, n, 1).col(0); }

inline Mat random_hermitian(Rng& rng, Eigen::Index n) {
  Mat X = random_matrix(rng, n, n);
  return 0.5 * (X + X.adjoint());
}

// K(X) of a random Hermitian X, rescaled to operator norm `norm`
Mat random_selfdual_hamiltonian(Rng& rng, const SelfDualSpace& sp, double norm = 1.0);

// exp of a random anti-Hermitian generator commuting with A
Mat random_bogoliubov(Rng& rng, const SelfDualSpace& sp, double scale = 1.0);

BasisProjection random_basis_projection(Rng& rng, const SelfDualSpace& sp);

}  // namespace fermi
