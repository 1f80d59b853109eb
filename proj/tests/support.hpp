#pragma once

// Random generators and independent oracles shared by the test binaries.

#include <cstdint>
#include <random>
#include <vector>

#include "nadim/field.hpp"
#include "nadim/linalg.hpp"

namespace nadim::testing {

inline std::vector<FieldSpec> all_backends() {
  return {padic_spec(2), padic_spec(3), padic_spec(5), laurent_spec(2), laurent_spec(3)};
}

// Haar sample on O scaled by pi^shift, shift uniform in [lo, hi].
template <class Rng>
FieldElement random_element(const FieldSpec& spec, Rng& rng, int lo = -3, int hi = 3) {
  const int shift = std::uniform_int_distribution<int>(lo, hi)(rng);
  return haar_sample(spec, rng, shift);
}

template <class Rng>
Matrix random_matrix(const FieldSpec& spec, std::size_t n, Rng& rng, int lo = -2, int hi = 3) {
  Matrix m(spec, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = random_element(spec, rng, lo, hi);
  return m;
}

template <class Rng>
Matrix random_nonsingular(const FieldSpec& spec, std::size_t n, Rng& rng, int lo = -2, int hi = 3) {
  while (true) {
    Matrix m = random_matrix(spec, n, rng, lo, hi);
    if (!det(m).is_zero()) return m;
  }
}

// Matrix whose entries all have norm 1 plus small perturbations, so every
// pivot search sees n^2 tied candidates.
template <class Rng>
Matrix tied_matrix(const FieldSpec& spec, std::size_t n, Rng& rng) {
  while (true) {
    Matrix m(spec, n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        FieldElement unit = haar_sample(spec, rng, 0);
        while (unit.is_zero() || unit.valuation() != 0) unit = haar_sample(spec, rng, 0);
        m(i, j) = unit;
      }
    }
    if (!det(m).is_zero()) return m;
  }
}

// Laplace expansion along the first row.
inline FieldElement cofactor_det(const Matrix& t) {
  const std::size_t n = t.rows();
  if (n == 1) return t(0, 0);
  FieldElement acc = FieldElement::zero(t.spec());
  for (std::size_t j = 0; j < n; ++j) {
    if (t(0, j).is_zero()) continue;
    Matrix minor(t.spec(), n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t c2 = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, c2++) = t(r, c);
      }
    }
    const FieldElement term = t(0, j) * cofactor_det(minor);
    acc = j % 2 == 0 ? acc + term : acc - term;
  }
  return acc;
}

// Scalar pi^v times the identity-like diagonal.
inline Matrix diag_monomials(const FieldSpec& spec, const std::vector<int>& v) {
  std::vector<FieldElement> d;
  for (const int x : v) d.push_back(FieldElement::monomial(spec, x));
  return Matrix::diagonal(spec, d);
}

// Base-p digits of a non-negative integer, least significant first.
inline std::vector<Digit> base_digits(unsigned __int128 a, Digit p, std::size_t count) {
  std::vector<Digit> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(static_cast<Digit>(a % p));
    a /= p;
  }
  return out;
}

}  // namespace nadim::testing
