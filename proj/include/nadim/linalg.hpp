#pragma once

// Dense matrices over a FieldSpec. Norms are reported as integer exponents
// (||T|| = q^-exponent), following the max-entry characterization of the
// operator norm for the product norm on F^n.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "nadim/errors.hpp"
#include "nadim/field.hpp"

namespace nadim {

using Vector = std::vector<FieldElement>;

class Matrix {
 public:
  Matrix() = default;

  Matrix(const FieldSpec& spec, std::size_t rows, std::size_t cols)
      : spec_(spec), rows_(rows), cols_(cols), entries_(rows * cols, FieldElement::zero(spec)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
  }

  static Matrix identity(const FieldSpec& spec, std::size_t n) {
    Matrix m(spec, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = FieldElement::one(spec);
    return m;
  }

  static Matrix diagonal(const FieldSpec& spec, std::span<const FieldElement> diag) {
    Matrix m(spec, diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  static Matrix column(const FieldSpec& spec, std::span<const FieldElement> x) {
    Matrix m(spec, x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
    return m;
  }

  const FieldSpec& spec() const { return spec_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  FieldElement& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const FieldElement& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
  }

  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
  }

  // row[target] += factor * row[source]
  void add_row_multiple(std::size_t target, std::size_t source, const FieldElement& factor) {
    for (std::size_t j = 0; j < cols_; ++j) (*this)(target, j) = (*this)(target, j) + factor * (*this)(source, j);
  }

  // col[target] += factor * col[source]
  void add_col_multiple(std::size_t target, std::size_t source, const FieldElement& factor) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, target) = (*this)(i, target) + factor * (*this)(i, source);
  }

 private:
  FieldSpec spec_{};
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<FieldElement> entries_;
};

inline Matrix with_precision(const Matrix& a, int digits) {
  const FieldSpec target = a.spec().with_precision(digits);
  Matrix out(target, a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = with_precision(a(i, j), target);
  return out;
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("mat_mul: shapes do not conform");
  Matrix out(a.spec(), a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      FieldElement acc = FieldElement::zero(a.spec());
      for (std::size_t k = 0; k < a.cols(); ++k) {
        if (a(i, k).is_zero() || b(k, j).is_zero()) continue;
        acc = acc + a(i, k) * b(k, j);
      }
      out(i, j) = std::move(acc);
    }
  }
  return out;
}

inline Matrix mat_add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mat_add: shapes differ");
  Matrix out(a.spec(), a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

inline Vector mat_vec(const Matrix& t, std::span<const FieldElement> x) {
  if (t.cols() != x.size()) throw std::invalid_argument("mat_vec: shapes do not conform");
  Vector out(t.rows(), FieldElement::zero(t.spec()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t k = 0; k < t.cols(); ++k) {
      if (t(i, k).is_zero() || x[k].is_zero()) continue;
      out[i] = out[i] + t(i, k) * x[k];
    }
  }
  return out;
}

inline Vector vec_add(std::span<const FieldElement> x, std::span<const FieldElement> y) {
  if (x.size() != y.size()) throw std::invalid_argument("vec_add: lengths differ");
  Vector out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(x[i] + y[i]);
  return out;
}

// Minimum coordinate valuation: ||x|| = q^-result for the max norm.
inline int vector_valuation(std::span<const FieldElement> x) {
  int v = kInfiniteValuation;
  for (const auto& e : x) v = std::min(v, e.valuation());
  return v;
}

inline Matrix scale(const FieldElement& c, const Matrix& a) {
  Matrix out(a.spec(), a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = c * a(i, j);
  return out;
}

// ||T|| = max_ij ||T_ij||, returned as the minimum entry valuation. Works for
// rectangular shapes too.
inline int op_norm_exponent(const Matrix& t) {
  int v = kInfiniteValuation;
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) v = std::min(v, t(i, j).valuation());
  if (v == kInfiniteValuation) throw ZeroMatrix("operator norm of the zero matrix");
  return v;
}

namespace detail {

// Position of an entry of maximal norm in the trailing block [k.., k..];
// ties resolve to the smallest (row, col).
inline std::pair<std::size_t, std::size_t> max_norm_entry(const Matrix& a, std::size_t k) {
  std::pair<std::size_t, std::size_t> best{k, k};
  int best_v = kInfiniteValuation;
  for (std::size_t i = k; i < a.rows(); ++i) {
    for (std::size_t j = k; j < a.cols(); ++j) {
      const int v = a(i, j).valuation();
      if (v < best_v) {
        best_v = v;
        best = {i, j};
      }
    }
  }
  return best;
}

}  // namespace detail

// Gaussian elimination with full max-norm pivoting: every multiplier has
// norm <= 1, so no digits are lost to division by small pivots.
inline FieldElement det(const Matrix& t) {
  if (!t.is_square()) throw std::invalid_argument("det: matrix is not square");
  Matrix a = t;
  const std::size_t n = a.rows();
  FieldElement result = FieldElement::one(t.spec());
  bool negate = false;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [pi, pj] = detail::max_norm_entry(a, k);
    if (a(pi, pj).is_zero()) return FieldElement::zero(t.spec());
    if (pi != k) {
      a.swap_rows(pi, k);
      negate = !negate;
    }
    if (pj != k) {
      a.swap_cols(pj, k);
      negate = !negate;
    }
    const FieldElement pivot_inv = inv(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k).is_zero()) continue;
      const FieldElement m = neg(a(i, k) * pivot_inv);
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) = a(i, j) + m * a(k, j);
      a(i, k) = FieldElement::zero(t.spec());
    }
    result = result * a(k, k);
  }
  return negate ? neg(result) : result;
}

inline Matrix submatrix(const Matrix& t, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Matrix out(t.spec(), rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = t(rows[i], cols[j]);
  return out;
}

inline FieldElement minor_det(const Matrix& t, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  if (rows.size() != cols.size() || rows.empty()) throw std::invalid_argument("minor_det: index lists differ in size");
  auto increasing = [](std::span<const std::size_t> idx, std::size_t bound) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= bound || (i > 0 && idx[i] <= idx[i - 1])) return false;
    }
    return true;
  };
  if (!increasing(rows, t.rows()) || !increasing(cols, t.cols())) {
    throw std::invalid_argument("minor_det: indices must be strictly increasing and in range");
  }
  return det(submatrix(t, rows, cols));
}

// Classical adjoint: adj(T)_ij = (-1)^{i+j} det(T with row j and column i removed).
inline Matrix adjugate(const Matrix& t) {
  if (!t.is_square()) throw std::invalid_argument("adjugate: matrix is not square");
  const std::size_t n = t.rows();
  if (n == 1) return Matrix::identity(t.spec(), 1);
  Matrix out(t.spec(), n, n);
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rows.clear();
      cols.clear();
      for (std::size_t r = 0; r < n; ++r)
        if (r != j) rows.push_back(r);
      for (std::size_t c = 0; c < n; ++c)
        if (c != i) cols.push_back(c);
      const FieldElement cof = det(submatrix(t, rows, cols));
      out(i, j) = (i + j) % 2 == 0 ? cof : neg(cof);
    }
  }
  return out;
}

inline Matrix inverse(const Matrix& t) {
  const FieldElement d = det(t);
  if (d.is_zero()) throw SingularMatrix("inverse of a singular matrix");
  return scale(inv(d), adjugate(t));
}

// Membership in the isometry group: ||T|| = ||det T|| = 1.
inline bool is_isometry(const Matrix& t) {
  if (!t.is_square()) return false;
  int norm = kInfiniteValuation;
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) norm = std::min(norm, t(i, j).valuation());
  if (norm != 0) return false;
  return det(t).valuation() == 0;
}

inline bool equal_at_precision(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!equal_at_precision(a(i, j), b(i, j))) return false;
  return true;
}

}  // namespace nadim
