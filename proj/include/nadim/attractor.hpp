#pragma once

// Affine iterated function systems S_i(x) = T_i x + b_i on F^n and exact
// ultrametric box counting of their attractors.
//
// Balls of radius q^-t partition F^n and coincide with digit cylinders, so
// the number of distinct length-t digit prefixes of points whose images
// S_w(B_R) have diameter <= q^-t is exactly the number of q^-t balls that
// meet the attractor.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "nadim/errors.hpp"
#include "nadim/linalg.hpp"
#include "nadim/parallel.hpp"
#include "nadim/pressure.hpp"
#include "nadim/svf.hpp"

namespace nadim {

// Largest ball exponent R_exp <= 0 with S_i(B_R) inside B_R, R = q^-R_exp:
// ||T_i x + b_i|| <= max(||T_i|| R, ||b_i||) and ||T_i|| < 1.
inline int invariant_radius(std::span<const Vector> translations) {
  int r = 0;
  for (const auto& b : translations) r = std::min(r, vector_valuation(b));
  return r;
}

class Aifs {
 public:
  Aifs() = default;

  Aifs(WordSpace ws, std::vector<Vector> translations) : ws_(std::move(ws)), translations_(std::move(translations)) {
    if (translations_.size() != ws_.alphabet_size()) {
      throw std::invalid_argument("need one translation per map");
    }
    for (const auto& b : translations_) {
      if (b.size() != ws_.dimension()) throw std::invalid_argument("translation has the wrong dimension");
      for (const auto& c : b)
        if (!(c.spec() == ws_.spec())) throw std::invalid_argument("translation from a different field");
    }
    radius_exp_ = invariant_radius(translations_);
  }

  const WordSpace& word_space() const { return ws_; }
  const std::vector<Vector>& translations() const { return translations_; }
  std::size_t dimension() const { return ws_.dimension(); }
  // R = q^-radius_exponent()
  int radius_exponent() const { return radius_exp_; }

  Aifs at_precision(int digits) const {
    std::vector<Vector> cut = translations_;
    const FieldSpec target = ws_.spec().with_precision(digits);
    for (auto& b : cut)
      for (auto& c : b) c = with_precision(c, target);
    return Aifs(ws_.at_precision(digits), std::move(cut));
  }

 private:
  WordSpace ws_;
  std::vector<Vector> translations_;
  int radius_exp_ = 0;
};

// S_{w_1} o ... o S_{w_k}(0) = b_{w_1} + T_{w_1} b_{w_2} + ... + T_{w_1..w_{k-1}} b_{w_k}.
inline Vector eval_point(const Aifs& aifs, std::span<const std::size_t> word) {
  if (word.empty()) throw std::invalid_argument("eval_point: empty word");
  const WordSpace& ws = aifs.word_space();
  Vector x = aifs.translations()[word.back()];
  for (std::size_t j = word.size() - 1; j-- > 0;) {
    x = vec_add(mat_vec(ws.map(word[j]), x), aifs.translations()[word[j]]);
  }
  return x;
}

struct BoxCountOptions {
  std::uint64_t node_cap = 2'000'000;
  unsigned workers = 1;
};

struct BoxCount {
  int t = 0;
  std::uint64_t count = 0;
  std::uint64_t words_expanded = 0;
};

// Concatenated per-coordinate digits at positions R_exp .. t-1.
inline PrefixKey ball_key(std::span<const FieldElement> x, int t, int r_exp) {
  PrefixKey key;
  key.reserve(x.size() * static_cast<std::size_t>(std::max(0, t - r_exp)));
  for (const auto& c : x) {
    const PrefixKey part = digit_prefix(c, t, r_exp);
    key.insert(key.end(), part.begin(), part.end());
  }
  return key;
}

struct BallCover {
  std::set<PrefixKey> keys;
  std::uint64_t words_expanded = 0;
};

namespace detail {

struct CoverWalk {
  const Aifs& aifs;
  int t;
  std::uint64_t cap;
  std::atomic<std::uint64_t>& expanded;

  // Node w carries T_w and x_w = S_w(0); S_w(B_R) = x_w + T_w B_R.
  void visit(const Matrix& t_w, const Vector& x_w, std::set<PrefixKey>& keys, std::uint64_t& local) const {
    if (++expanded > cap) throw BudgetExceeded("box count expanded more than " + std::to_string(cap) + " words");
    ++local;
    if (op_norm_exponent(t_w) + aifs.radius_exponent() >= t) {
      keys.insert(ball_key(x_w, t, aifs.radius_exponent()));
      return;
    }
    const WordSpace& ws = aifs.word_space();
    for (std::size_t i = 0; i < ws.alphabet_size(); ++i) {
      visit(mat_mul(t_w, ws.map(i)), vec_add(x_w, mat_vec(t_w, aifs.translations()[i])), keys, local);
    }
  }
};

inline BallCover cover_at(const Aifs& aifs, int t, const BoxCountOptions& options) {
  const WordSpace& ws = aifs.word_space();
  const FieldSpec& spec = ws.spec();
  const std::size_t n = aifs.dimension();
  std::atomic<std::uint64_t> expanded{0};
  const CoverWalk walk{aifs, t, options.node_cap, expanded};

  BallCover out;
  const Matrix identity = Matrix::identity(spec, n);
  const Vector origin(n, FieldElement::zero(spec));
  if (aifs.radius_exponent() >= t) {
    walk.visit(identity, origin, out.keys, out.words_expanded);
    return out;
  }
  // Root counted here; the M first-level subtrees run independently.
  ++expanded;
  out.words_expanded = 1;
  const std::size_t m = ws.alphabet_size();
  std::vector<std::set<PrefixKey>> keys(m);
  std::vector<std::uint64_t> local(m, 0);
  parallel_for(m, options.workers, [&](std::size_t i) {
    walk.visit(ws.map(i), aifs.translations()[i], keys[i], local[i]);
  });
  for (std::size_t i = 0; i < m; ++i) {
    out.keys.merge(keys[i]);
    out.words_expanded += local[i];
  }
  return out;
}

}  // namespace detail

// Keys of all radius-q^-t balls meeting the attractor. Branches stop as soon
// as ||T_w|| R <= q^-t. The walk first runs with just enough digits for the
// keys plus a margin and falls back to full precision if cancellation eats
// into them.
inline BallCover ball_cover(const Aifs& aifs, int t, const BoxCountOptions& options = {}) {
  constexpr int kMargin = 16;
  const int needed = std::max(0, t - aifs.radius_exponent()) + kMargin;
  if (needed < aifs.word_space().spec().precision) {
    try {
      return detail::cover_at(aifs.at_precision(needed), t, options);
    } catch (const PrecisionExhausted&) {
    }
  }
  return detail::cover_at(aifs, t, options);
}

inline BoxCount box_count(const Aifs& aifs, int t, const BoxCountOptions& options = {}) {
  const BallCover cover = ball_cover(aifs, t, options);
  return {t, cover.keys.size(), cover.words_expanded};
}

struct BoxCountTable {
  std::vector<BoxCount> rows;
};

struct BoxDimensionEstimate {
  BoxCountTable table;
  double slope = 0.0;
};

// Least-squares slope of log_q N_t against t.
inline double log_log_slope(std::span<const BoxCount> rows, std::uint32_t q) {
  if (rows.size() < 2) throw std::invalid_argument("slope needs at least two scales");
  const double log_q = std::log(static_cast<double>(q));
  double mean_t = 0, mean_y = 0;
  for (const auto& r : rows) {
    mean_t += r.t;
    mean_y += std::log(static_cast<double>(r.count)) / log_q;
  }
  mean_t /= static_cast<double>(rows.size());
  mean_y /= static_cast<double>(rows.size());
  double num = 0, den = 0;
  for (const auto& r : rows) {
    const double dt = r.t - mean_t;
    num += dt * (std::log(static_cast<double>(r.count)) / log_q - mean_y);
    den += dt * dt;
  }
  return num / den;
}

inline BoxDimensionEstimate box_dimension_estimate(const Aifs& aifs, int t_min, int t_max,
                                                   const BoxCountOptions& options = {}) {
  if (t_min >= t_max) throw std::invalid_argument("box_dimension_estimate: need t_min < t_max");
  BoxDimensionEstimate out;
  for (int t = t_min; t <= t_max; ++t) out.table.rows.push_back(box_count(aifs, t, options));
  out.slope = log_log_slope(out.table.rows, aifs.word_space().spec().q());
  return out;
}

// Translations with every coordinate Haar-uniform on O.
template <class Rng>
std::vector<Vector> haar_translations(const WordSpace& ws, Rng& rng) {
  std::vector<Vector> out(ws.alphabet_size());
  for (auto& b : out) {
    for (std::size_t j = 0; j < ws.dimension(); ++j) b.push_back(haar_sample(ws.spec(), rng, 0));
  }
  return out;
}

// Independent stream for one trial of an experiment.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

struct ExperimentOptions {
  int t_min = 4;
  int t_max = 12;
  int k_max = 12;
  double tol = 1e-9;
  double band = 0.05;        // |estimate - min(n, d)| counted as agreement
  double fit_slack = 0.02;   // allowed excess of an estimate over s_upper
  BoxCountOptions box{};
};

struct TrialResult {
  std::uint64_t trial = 0;
  double estimate = 0.0;
  double deviation = 0.0;  // estimate - target
  bool within_band = false;
};

struct ExperimentReport {
  PressureBracket bracket;
  double target = 0.0;  // min(n, s_upper)
  std::vector<TrialResult> trials;
  std::size_t within_band = 0;
  std::size_t above_upper_bound = 0;  // estimate > s_upper + fit_slack
};

// Draws every b_i coordinate Haar-uniform on O per trial and compares the box
// dimension estimate with min(n, d).
inline ExperimentReport random_translation_experiment(const WordSpace& ws, std::size_t trials, std::uint64_t seed,
                                                      const ExperimentOptions& options = {}) {
  if (trials < 1) throw std::invalid_argument("experiment needs at least one trial");
  ExperimentReport out;
  out.bracket = critical_exponent(ws, options.k_max, options.tol, options.box.workers);
  out.target = std::min(static_cast<double>(ws.dimension()), out.bracket.s_upper);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    auto rng = trial_rng(seed, trial);
    const Aifs aifs(ws, haar_translations(ws, rng));
    const double estimate = box_dimension_estimate(aifs, options.t_min, options.t_max, options.box).slope;
    TrialResult r{trial, estimate, estimate - out.target, std::abs(estimate - out.target) <= options.band};
    out.within_band += r.within_band ? 1 : 0;
    out.above_upper_bound += estimate > out.bracket.s_upper + options.fit_slack ? 1 : 0;
    out.trials.push_back(r);
  }
  return out;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Monte-Carlo average of ||T x||^-s over Haar-uniform x in O^n, for
// non-integer 0 < s < n.
template <class Rng>
MonteCarloEstimate potential_integral_mc(const Matrix& t, double s, std::size_t samples, Rng& rng) {
  const auto n = static_cast<double>(t.rows());
  if (!(s > 0 && s < n) || std::floor(s) == s) {
    throw std::invalid_argument("potential integral needs non-integer 0 < s < n");
  }
  if (samples < 2) throw std::invalid_argument("potential integral needs at least two samples");
  const FieldSpec& spec = t.spec();
  const double log_q = std::log(static_cast<double>(spec.q()));
  double mean = 0.0, m2 = 0.0;
  std::size_t taken = 0;
  Vector x(t.cols());
  while (taken < samples) {
    for (auto& c : x) c = haar_sample(spec, rng, 0);
    const int v = vector_valuation(mat_vec(t, x));
    if (v == kInfiniteValuation) continue;  // measure-zero event
    const double value = std::exp(s * v * log_q);
    ++taken;
    const double delta = value - mean;
    mean += delta / static_cast<double>(taken);
    m2 += delta * (value - mean);
  }
  const double variance = m2 / static_cast<double>(taken - 1);
  return {mean, std::sqrt(variance / static_cast<double>(taken)), taken};
}

}  // namespace nadim
