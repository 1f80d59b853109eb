#pragma once

// Isometric singular value decomposition T = P D Q with P, Q in the isometry
// group and D diagonal. Only the norms of D's entries are determined by T;
// their valuations v_1 <= ... <= v_n give the singular values
// alpha_i = q^-v_i.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "nadim/errors.hpp"
#include "nadim/linalg.hpp"

namespace nadim {

struct SingularDecomposition {
  Matrix P;
  Matrix D;
  Matrix Q;
  std::vector<int> valuations;  // ascending, so singular values descend
};

namespace detail {

using Cell = std::pair<std::size_t, std::size_t>;
// Picks one pivot among equal-norm candidates (listed in row-major order).
using TieBreaker = std::function<std::size_t(std::size_t candidate_count)>;

struct Elimination {
  Matrix A;  // diagonal on exit
  Matrix P;
  Matrix Q;
};

// Invariant throughout: T = P * A * Q. Row operations on A are undone by
// column operations on P, column operations by row operations on Q. When
// `accumulate` is false P and Q are left untouched.
inline Elimination eliminate(const Matrix& t, bool accumulate, const TieBreaker& choose) {
  if (!t.is_square()) throw std::invalid_argument("svd: matrix is not square");
  const std::size_t n = t.rows();
  const FieldSpec& spec = t.spec();
  Elimination e{t, accumulate ? Matrix::identity(spec, n) : Matrix{},
                accumulate ? Matrix::identity(spec, n) : Matrix{}};
  Matrix& a = e.A;
  std::vector<Cell> candidates;
  for (std::size_t k = 0; k < n; ++k) {
    int best = kInfiniteValuation;
    candidates.clear();
    for (std::size_t i = k; i < n; ++i) {
      for (std::size_t j = k; j < n; ++j) {
        const int v = a(i, j).valuation();
        if (v < best) {
          best = v;
          candidates.clear();
        }
        if (v == best && v != kInfiniteValuation) candidates.emplace_back(i, j);
      }
    }
    if (candidates.empty()) throw SingularMatrix("svd: matrix is singular");
    const auto [pi, pj] = candidates[candidates.size() == 1 ? 0 : choose(candidates.size())];

    a.swap_rows(pi, k);
    a.swap_cols(pj, k);
    if (accumulate) {
      e.P.swap_cols(pi, k);
      e.Q.swap_rows(pj, k);
    }

    const FieldElement pivot_inv = inv(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k).is_zero()) continue;
      const FieldElement m = a(i, k) * pivot_inv;  // ||m|| <= 1
      const FieldElement minus_m = neg(m);
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) = a(i, j) + minus_m * a(k, j);
      a(i, k) = FieldElement::zero(spec);
      if (accumulate) e.P.add_col_multiple(k, i, m);
    }
    for (std::size_t j = k + 1; j < n; ++j) {
      if (a(k, j).is_zero()) continue;
      const FieldElement m = a(k, j) * pivot_inv;
      a(k, j) = FieldElement::zero(spec);
      if (accumulate) e.Q.add_row_multiple(k, j, m);
    }
  }
  return e;
}

inline SingularDecomposition finish(Elimination e) {
  const std::size_t n = e.A.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return e.A(x, x).valuation() < e.A(y, y).valuation();
  });
  const FieldSpec& spec = e.A.spec();
  SingularDecomposition out{Matrix(spec, n, n), Matrix(spec, n, n), Matrix(spec, n, n), {}};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    out.D(r, r) = e.A(src, src);
    out.valuations.push_back(e.A(src, src).valuation());
    for (std::size_t i = 0; i < n; ++i) {
      out.P(i, r) = e.P(i, src);
      out.Q(r, i) = e.Q(src, i);
    }
  }
  return out;
}

inline std::size_t first_candidate(std::size_t) { return 0; }

}  // namespace detail

// Deterministic decomposition: among max-norm pivots the smallest
// (row, col) wins.
inline SingularDecomposition svd(const Matrix& t) {
  return detail::finish(detail::eliminate(t, true, detail::first_candidate));
}

// Same algorithm with uniformly random choice among tied pivots.
template <class Rng>
SingularDecomposition svd(const Matrix& t, Rng& rng) {
  auto choose = [&rng](std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  };
  return detail::finish(detail::eliminate(t, true, choose));
}

// Valuations only; skips accumulating P and Q.
inline std::vector<int> singular_valuations(const Matrix& t) {
  const detail::Elimination e = detail::eliminate(t, false, detail::first_candidate);
  std::vector<int> v;
  v.reserve(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) v.push_back(e.A(i, i).valuation());
  std::ranges::sort(v);
  return v;
}

namespace detail {

// Calls fn(indices) for every strictly increasing k-subset of {0..n-1}.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    fn(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

// Singular valuations from minors: alpha_1 ... alpha_s equals the largest
// norm of an s x s minor, so v_s is the increment of the minimal minor
// valuation from size s-1 to size s.
inline std::vector<int> singular_valuations_by_minors(const Matrix& t) {
  if (!t.is_square()) throw std::invalid_argument("singular_valuations_by_minors: matrix is not square");
  const std::size_t n = t.rows();
  std::vector<int> out;
  int previous = 0;
  for (std::size_t s = 1; s <= n; ++s) {
    int best = kInfiniteValuation;
    detail::for_each_subset(n, s, [&](std::span<const std::size_t> rows) {
      detail::for_each_subset(n, s, [&](std::span<const std::size_t> cols) {
        best = std::min(best, minor_det(t, rows, cols).valuation());
      });
    });
    if (best == kInfiniteValuation) throw SingularMatrix("singular_valuations_by_minors: matrix is singular");
    out.push_back(best - previous);
    previous = best;
  }
  return out;
}

// Decomposes twice with random tie-breaking and compares the valuations.
template <class Rng>
bool svd_uniqueness_probe(const Matrix& t, Rng& rng) {
  const auto first = svd(t, rng).valuations;
  const auto second = svd(t, rng).valuations;
  return first == second;
}

}  // namespace nadim
