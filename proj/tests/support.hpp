#pragma once

#include <random>

#include "corlab/hilbert.hpp"

// Deterministic random operators for property tests. Every test case builds
// its own engine so case order never changes what a case sees.
namespace corlab::testing {

inline std::mt19937 engine(unsigned seed) { return std::mt19937(seed); }

inline Matrix random_matrix(Index rows, Index cols, std::mt19937& gen) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(dist(gen), dist(gen));
  return m;
}

inline Matrix random_hermitian(Index n, std::mt19937& gen) {
  Matrix a = random_matrix(n, n, gen);
  return 0.5 * (a + a.adjoint());
}

inline Matrix random_density(Index n, std::mt19937& gen) {
  Matrix a = random_matrix(n, n, gen);
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline Vector random_state(Index n, std::mt19937& gen) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = Complex(dist(gen), dist(gen));
  v.normalize();
  return v;
}

}  // namespace corlab::testing
