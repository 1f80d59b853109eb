#pragma once

// Singular value function phi^s evaluated in log-base-q space. With
// alpha_i = q^-v_i:
//
//   0 < s <= n, m = ceil(s):  log_q phi^s = -(v_1 + ... + v_{m-1} + (s-m+1) v_m)
//   s > n:                    log_q phi^s = -(s/n) (v_1 + ... + v_n)
//   s = 0:                    phi^0 = 1
//
// The only floating-point step is the multiplication by the fractional
// weight; integer s has an exact integer form (scaled_phi_log).

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "nadim/errors.hpp"
#include "nadim/svd.hpp"

namespace nadim {

struct PhiValue {
  double log_q_value = 0.0;
  std::uint32_t q = 2;

  double natural_log() const { return log_q_value * std::log(static_cast<double>(q)); }
  double value() const { return std::pow(static_cast<double>(q), log_q_value); }
};

inline PhiValue phi_log(std::span<const int> valuations, double s, std::uint32_t q) {
  if (s < 0) throw NegativeExponent("singular value function needs s >= 0");
  if (valuations.empty()) throw std::invalid_argument("phi_log: empty valuation list");
  const auto n = static_cast<double>(valuations.size());
  if (s == 0) return {0.0, q};
  if (s > n) {
    const long long total = std::accumulate(valuations.begin(), valuations.end(), 0LL);
    return {-(s / n) * static_cast<double>(total), q};
  }
  const auto m = static_cast<std::size_t>(std::ceil(s));
  long long head = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) head += valuations[i];
  const double weight = s - static_cast<double>(m) + 1.0;
  return {-(static_cast<double>(head) + weight * valuations[m - 1]), q};
}

// n * log_q phi^s for integer s >= 0, exactly.
inline std::int64_t scaled_phi_log(std::span<const int> valuations, std::int64_t s) {
  if (s < 0) throw NegativeExponent("singular value function needs s >= 0");
  const auto n = static_cast<std::int64_t>(valuations.size());
  if (s > n) return -s * std::accumulate(valuations.begin(), valuations.end(), std::int64_t{0});
  const std::int64_t head = std::accumulate(valuations.begin(), valuations.begin() + s, std::int64_t{0});
  return -n * head;
}

inline PhiValue phi(const Matrix& t, double s) {
  return phi_log(singular_valuations(t), s, t.spec().q());
}

// Relative tolerance used for non-integer exponents.
inline constexpr double kLogTolerance = 1e-12;

inline bool is_integer_exponent(double s) { return std::floor(s) == s; }

// phi^s(TU) <= phi^s(T) phi^s(U) on every s of the grid: exact integer
// comparison at integer s, relative tolerance on log values otherwise.
inline bool check_submultiplicative(const Matrix& t, const Matrix& u, std::span<const double> s_grid) {
  const auto vt = singular_valuations(t);
  const auto vu = singular_valuations(u);
  const auto vtu = singular_valuations(mat_mul(t, u));
  const std::uint32_t q = t.spec().q();
  for (const double s : s_grid) {
    if (is_integer_exponent(s)) {
      const auto k = static_cast<std::int64_t>(s);
      if (scaled_phi_log(vtu, k) > scaled_phi_log(vt, k) + scaled_phi_log(vu, k)) return false;
      continue;
    }
    const double lhs = phi_log(vtu, s, q).log_q_value;
    const double rhs = phi_log(vt, s, q).log_q_value + phi_log(vu, s, q).log_q_value;
    if (lhs > rhs + kLogTolerance * std::max(1.0, std::abs(rhs))) return false;
  }
  return true;
}

}  // namespace nadim
