#pragma once

// Word space over {1..M}, partition sums S_k(s) = sum_{|w|=k} phi^s(T_w),
// and a bracket for the zero d of the topological pressure
// P(s) = lim_k (1/k) log S_k(s).
//
// log S_k is subadditive in k, so P(s) = inf_k f_k(s) with
// f_k = (1/k) log S_k. Every root s_k of f_k is therefore an upper bound
// for d. The lower bound uses phi^s(T_w) >= b^{s|w|}, b the smallest
// singular value over the generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nadim/errors.hpp"
#include "nadim/parallel.hpp"
#include "nadim/svd.hpp"
#include "nadim/svf.hpp"

namespace nadim {

// Symbols are 0-based internally; reports print them 1-based.
using Word = std::vector<std::size_t>;

class WordSpace {
 public:
  WordSpace() = default;

  explicit WordSpace(std::vector<Matrix> maps) : maps_(std::move(maps)) {
    if (maps_.size() < 2) throw std::invalid_argument("word space needs at least two maps");
    const FieldSpec& spec = maps_.front().spec();
    const std::size_t n = maps_.front().rows();
    a_exp_ = kInfiniteValuation;
    b_exp_ = 0;
    for (std::size_t i = 0; i < maps_.size(); ++i) {
      const Matrix& t = maps_[i];
      if (!(t.spec() == spec) || !t.is_square() || t.rows() != n) {
        throw std::invalid_argument("map " + std::to_string(i + 1) + " has a different shape or field");
      }
      if (det(t).is_zero()) throw SingularMap("map " + std::to_string(i + 1) + " is singular");
      const int norm = op_norm_exponent(t);
      if (norm < 1) {
        throw ContractivityViolation("map " + std::to_string(i + 1) + " has norm q^" + std::to_string(-norm) +
                                     " >= 1");
      }
      auto v = singular_valuations(t);
      a_exp_ = std::min(a_exp_, v.front());
      b_exp_ = std::max(b_exp_, v.back());
      valuations_.push_back(std::move(v));
    }
  }

  std::size_t alphabet_size() const { return maps_.size(); }
  std::size_t dimension() const { return maps_.front().rows(); }
  const FieldSpec& spec() const { return maps_.front().spec(); }
  const Matrix& map(std::size_t i) const { return maps_[i]; }
  std::span<const Matrix> maps() const { return maps_; }

  // a = q^-a_exp bounds every singular value from above, b = q^-b_exp from
  // below.
  int a_exp() const { return a_exp_; }
  int b_exp() const { return b_exp_; }
  const std::vector<int>& map_valuations(std::size_t i) const { return valuations_[i]; }

  // Same maps with every entry cut to `digits` significant digits.
  WordSpace at_precision(int digits) const {
    std::vector<Matrix> cut;
    cut.reserve(maps_.size());
    for (const auto& t : maps_) cut.push_back(with_precision(t, digits));
    return WordSpace(std::move(cut));
  }

 private:
  std::vector<Matrix> maps_;
  std::vector<std::vector<int>> valuations_;
  int a_exp_ = 0;
  int b_exp_ = 0;
};

namespace detail {

// Visits the node (word, t_w) and every extension up to max_depth; returns
// the number of nodes visited.
template <class Visit>
std::uint64_t walk(const WordSpace& ws, Word& word, const Matrix& t_w, std::size_t max_depth, Visit& visit) {
  visit(static_cast<const Word&>(word), t_w);
  std::uint64_t nodes = 1;
  if (word.size() == max_depth) return nodes;
  for (std::size_t i = 0; i < ws.alphabet_size(); ++i) {
    word.push_back(i);
    nodes += walk(ws, word, mat_mul(t_w, ws.map(i)), max_depth, visit);
    word.pop_back();
  }
  return nodes;
}

template <class Visit>
std::uint64_t walk_subtree(const WordSpace& ws, std::size_t root, int max_depth, Visit& visit) {
  Word word{root};
  return walk(ws, word, ws.map(root), static_cast<std::size_t>(max_depth), visit);
}

}  // namespace detail

// Depth-first, lexicographic visit of every word of length `depth` with its
// product T_w, built incrementally (one product per tree node). Returns the
// number of tree nodes, (M^{k+1} - M) / (M - 1).
template <class Visit>
std::uint64_t word_fold(const WordSpace& ws, int depth, Visit&& visit) {
  if (depth < 1) throw std::invalid_argument("word_fold: depth must be >= 1");
  const auto leaf = static_cast<std::size_t>(depth);
  auto leaves_only = [&](const Word& w, const Matrix& t) {
    if (w.size() == leaf) visit(w, t);
  };
  std::uint64_t nodes = 0;
  for (std::size_t i = 0; i < ws.alphabet_size(); ++i) nodes += detail::walk_subtree(ws, i, depth, leaves_only);
  return nodes;
}

// Multiset of singular valuation vectors of T_w over all |w| = depth. It
// holds everything S_k(s) depends on, for every s.
struct ValuationProfile {
  int depth = 0;
  std::uint32_t q = 2;
  std::map<std::vector<int>, std::uint64_t> counts;
};

namespace detail {

// Profiles for every depth 1..max_depth from a single traversal. The M
// first-level subtrees are folded independently and merged in symbol
// order; the counts are integers, so the result does not depend on
// `workers`.
inline std::vector<ValuationProfile> fold_profiles(const WordSpace& ws, int max_depth, unsigned workers,
                                                   std::uint64_t* nodes) {
  const std::size_t m = ws.alphabet_size();
  const auto depth = static_cast<std::size_t>(max_depth);
  std::vector<std::vector<std::map<std::vector<int>, std::uint64_t>>> parts(
      m, std::vector<std::map<std::vector<int>, std::uint64_t>>(depth));
  std::vector<std::uint64_t> part_nodes(m, 0);
  parallel_for(m, workers, [&](std::size_t root) {
    auto& buckets = parts[root];
    auto visit = [&buckets](const Word& w, const Matrix& t) { ++buckets[w.size() - 1][singular_valuations(t)]; };
    part_nodes[root] = walk_subtree(ws, root, max_depth, visit);
  });
  std::vector<ValuationProfile> out(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    out[k].depth = static_cast<int>(k + 1);
    out[k].q = ws.spec().q();
    for (const auto& buckets : parts)
      for (const auto& [v, c] : buckets[k]) out[k].counts[v] += c;
  }
  if (nodes) {
    *nodes = 0;
    for (const auto c : part_nodes) *nodes += c;
  }
  return out;
}

}  // namespace detail

// Significant digits carried through the word products. Valuations stay
// exact while any digit survives; if cancellation exhausts them the fold is
// redone at the field's full precision.
inline constexpr int kWorkingPrecision = 24;

inline std::vector<ValuationProfile> partition_profiles(const WordSpace& ws, int max_depth, unsigned workers = 1,
                                                        std::uint64_t* nodes = nullptr) {
  if (max_depth < 1) throw std::invalid_argument("partition_profiles: depth must be >= 1");
  if (ws.spec().precision > kWorkingPrecision) {
    try {
      return detail::fold_profiles(ws.at_precision(kWorkingPrecision), max_depth, workers, nodes);
    } catch (const PrecisionExhausted&) {
    }
  }
  return detail::fold_profiles(ws, max_depth, workers, nodes);
}

inline ValuationProfile partition_profile(const WordSpace& ws, int depth, unsigned workers = 1) {
  return std::move(partition_profiles(ws, depth, workers).back());
}

// log S_k(s), natural log, by max-shifted exponential summation.
inline double log_partition_sum(const ValuationProfile& profile, double s) {
  if (s < 0) throw NegativeExponent("partition sum needs s >= 0");
  double top = -INFINITY;
  std::vector<std::pair<double, std::uint64_t>> terms;
  terms.reserve(profile.counts.size());
  for (const auto& [v, c] : profile.counts) {
    const double l = phi_log(v, s, profile.q).natural_log();
    terms.emplace_back(l, c);
    top = std::max(top, l);
  }
  double acc = 0.0;
  for (const auto& [l, c] : terms) acc += static_cast<double>(c) * std::exp(l - top);
  return top + std::log(acc);
}

inline double log_partition_sum(const WordSpace& ws, double s, int k, unsigned workers = 1) {
  return log_partition_sum(partition_profile(ws, k, workers), s);
}

struct ProbePoint {
  double s = 0.0;
  double f = 0.0;  // (1/k) log S_k(s)
};

struct PressureBracket {
  int k = 0;
  double s_lower = 0.0;
  double s_upper = 0.0;
  std::vector<double> roots;       // root of f_j for j = 1..k
  std::vector<ProbePoint> profile;  // f_k on a grid over the bisection domain
  std::uint64_t nodes = 0;
};

// Largest depth (capped at 12) with M^k within the node budget.
inline int default_k_max(std::size_t alphabet_size, double node_budget = 1e6) {
  int k = 1;
  while (k < 12 && std::pow(static_cast<double>(alphabet_size), k + 1) <= node_budget) ++k;
  return k;
}

inline double bisection_upper_end(const WordSpace& ws) {
  return static_cast<double>(ws.dimension()) +
         std::log(static_cast<double>(ws.alphabet_size())) / std::log(static_cast<double>(ws.spec().q())) + 1.0;
}

// Root of the decreasing function f on [0, hi] to within tol; the returned
// value is the right end of the final interval, so f(root) <= 0.
template <class F>
double bisect_decreasing(F&& f, double hi, double tol) {
  double lo = 0.0;
  if (f(lo) <= 0) throw BracketFailure("f(0) <= 0: no sign change");
  if (f(hi) > 0) throw BracketFailure("f stays positive on the bisection domain");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return hi;
}

inline PressureBracket critical_exponent(const WordSpace& ws, int k_max, double tol = 1e-9, unsigned workers = 1) {
  if (k_max < 1) throw std::invalid_argument("critical_exponent: k_max must be >= 1");
  if (!(tol > 0)) throw std::invalid_argument("critical_exponent: tol must be positive");
  const double hi = bisection_upper_end(ws);
  const double log_m = std::log(static_cast<double>(ws.alphabet_size()));
  const double log_q = std::log(static_cast<double>(ws.spec().q()));

  PressureBracket out;
  out.k = k_max;
  out.s_upper = INFINITY;
  const auto profiles = partition_profiles(ws, k_max, workers, &out.nodes);
  for (const auto& profile : profiles) {
    auto f = [&](double s) { return log_partition_sum(profile, s) / profile.depth; };
    const double root = bisect_decreasing(f, hi, tol);
    out.roots.push_back(root);
    out.s_upper = std::min(out.s_upper, root);
  }
  const ValuationProfile& last = profiles.back();
  constexpr int kProbes = 8;
  for (int j = 0; j <= kProbes; ++j) {
    const double s = hi * j / kProbes;
    out.profile.push_back({s, log_partition_sum(last, s) / k_max});
  }
  const double lower = log_m / (static_cast<double>(ws.b_exp()) * log_q);
  // The two bounds coincide exactly for equal similarities; clamp the
  // rounding difference.
  out.s_lower = std::clamp(lower, 0.0, out.s_upper);
  return out;
}

enum class TailBehaviour { converging, diverging, inconclusive };

inline std::string_view to_string(TailBehaviour t) {
  switch (t) {
    case TailBehaviour::converging:
      return "converging";
    case TailBehaviour::diverging:
      return "diverging";
    default:
      return "inconclusive";
  }
}

// Diagnostic only. Any f_k(s) < 0 bounds the pressure below zero, so the
// series over all words converges; a positive lower bound
// log M - s b_exp log q proves divergence; otherwise f_{k_max} clearly
// above zero is read as divergence.
inline TailBehaviour series_tail_probe(const WordSpace& ws, double s, int k_max, unsigned workers = 1) {
  if (s < 0) throw NegativeExponent("series_tail_probe needs s >= 0");
  constexpr double kZeroBand = 1e-9;
  constexpr double kDivergenceMargin = 1e-3;
  double f_min = INFINITY;
  double f_last = 0.0;
  for (const auto& profile : partition_profiles(ws, k_max, workers)) {
    f_last = log_partition_sum(profile, s) / profile.depth;
    f_min = std::min(f_min, f_last);
  }
  if (f_min < -kZeroBand) return TailBehaviour::converging;
  const double lower = std::log(static_cast<double>(ws.alphabet_size())) -
                       s * ws.b_exp() * std::log(static_cast<double>(ws.spec().q()));
  if (lower > kZeroBand || f_last > kDivergenceMargin) return TailBehaviour::diverging;
  return TailBehaviour::inconclusive;
}

}  // namespace nadim
