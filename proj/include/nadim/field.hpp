#pragma once

// Exact arithmetic in the two concrete local fields used throughout the
// library:
//
//   padic   : Q_p, elements  p^v * (d0 + d1 p + d2 p^2 + ...), base-p carries
//   laurent : F_p((X^-1)), elements X^-v * (d0 + d1 X^-1 + ...), no carries
//
// Both share one representation: an integer valuation v and a unit part
// given by its first `significant` residue digits, d0 != 0. The norm is
// ||x|| = p^-v and is never materialised as a float. The uniformizer is
// p (padic) or X^-1 (laurent); in the laurent backend the valuation is
// -deg(x).
//
// Precision is relative: every element carries at most `precision` digits.
// Addition keeps only the digits known in both operands, so cancellation of
// leading digits lowers the significant count; dropping below
// `min_significant` raises PrecisionExhausted. A sum whose known digits all
// cancel is returned as exact zero.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nadim/errors.hpp"

namespace nadim {

using Digit = std::uint32_t;

// Valuation of zero.
inline constexpr int kInfiniteValuation = std::numeric_limits<int>::max();

enum class FieldKind { padic, laurent };

inline std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::padic ? "padic" : "laurent";
}

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

struct FieldSpec {
  FieldKind kind = FieldKind::padic;
  Digit p = 2;
  int precision = 64;
  int min_significant = 8;

  // Largest supported residue characteristic; keeps digit convolutions
  // inside 64-bit accumulators.
  static constexpr Digit kMaxPrime = 1u << 16;

  // Residue field size; ||pi|| = 1/q.
  Digit q() const { return p; }

  // Floor actually enforced, never above the precision itself.
  int floor() const { return std::min(min_significant, precision); }

  void validate() const {
    if (!is_prime(p)) throw NonPrimeP("residue characteristic p=" + std::to_string(p) + " is not prime");
    if (p >= kMaxPrime) throw NonPrimeP("residue characteristic p=" + std::to_string(p) + " exceeds 2^16");
    if (precision < 1) throw std::invalid_argument("precision must be >= 1");
    if (min_significant < 1) throw std::invalid_argument("min_significant must be >= 1");
  }

  FieldSpec with_precision(int digits) const {
    FieldSpec out = *this;
    out.precision = digits;
    return out;
  }

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

inline FieldSpec padic_spec(Digit p, int precision = 64) {
  FieldSpec spec{FieldKind::padic, p, precision, 8};
  spec.validate();
  return spec;
}

inline FieldSpec laurent_spec(Digit p, int precision = 64) {
  FieldSpec spec{FieldKind::laurent, p, precision, 8};
  spec.validate();
  return spec;
}

namespace detail {

// Inverse of a nonzero residue modulo the prime p (extended Euclid).
inline Digit residue_inverse(Digit a, Digit p) {
  std::int64_t r0 = p, r1 = a % p;
  std::int64_t t0 = 0, t1 = 1;
  while (r1 != 0) {
    const std::int64_t quot = r0 / r1;
    std::tie(r0, r1) = std::pair{r1, r0 - quot * r1};
    std::tie(t0, t1) = std::pair{t1, t0 - quot * t1};
  }
  if (r0 != 1) throw DivisionByZero("residue has no inverse modulo p");
  if (t0 < 0) t0 += p;
  return static_cast<Digit>(t0);
}

}  // namespace detail

class FieldElement {
 public:
  FieldElement() = default;

  static FieldElement zero(const FieldSpec& spec) {
    FieldElement x;
    x.spec_ = spec;
    return x;
  }

  static FieldElement one(const FieldSpec& spec) { return monomial(spec, 0); }

  static FieldElement uniformizer(const FieldSpec& spec) { return monomial(spec, 1); }

  // pi^v exactly.
  static FieldElement monomial(const FieldSpec& spec, int v) {
    std::vector<Digit> digits(static_cast<std::size_t>(spec.precision), 0);
    digits[0] = 1;
    return FieldElement(spec, v, std::move(digits));
  }

  // Builds pi^v * (d0 + d1 pi + ...). Leading zero digits are folded into
  // the valuation; digits beyond those given are exact zeros up to the
  // precision window. All-zero input yields zero.
  static FieldElement from_digits(const FieldSpec& spec, int v, std::span<const Digit> digits) {
    std::size_t lead = 0;
    while (lead < digits.size() && digits[lead] == 0) ++lead;
    if (lead == digits.size()) return zero(spec);
    const auto n = static_cast<std::size_t>(spec.precision);
    std::vector<Digit> unit(n, 0);
    for (std::size_t i = 0; i < n && lead + i < digits.size(); ++i) {
      if (digits[lead + i] >= spec.p) throw std::invalid_argument("digit out of range [0, p)");
      unit[i] = digits[lead + i];
    }
    return FieldElement(spec, v + static_cast<int>(lead), std::move(unit));
  }

  const FieldSpec& spec() const { return spec_; }
  bool is_zero() const { return digits_.empty(); }

  // kInfiniteValuation for zero; ||x|| = q^-valuation otherwise.
  int valuation() const { return is_zero() ? kInfiniteValuation : valuation_; }

  // Count of known unit digits.
  int significant() const { return static_cast<int>(digits_.size()); }

  // Positions below this index are known; kInfiniteValuation for zero.
  int absolute_precision() const {
    return is_zero() ? kInfiniteValuation : valuation_ + significant();
  }

  std::span<const Digit> digits() const { return digits_; }

  // Digit at absolute position `pos`, i.e. the coefficient of pi^pos.
  Digit digit_at(int pos) const {
    if (is_zero() || pos < valuation_) return 0;
    if (pos >= absolute_precision()) throw PrecisionExhausted("digit position beyond known precision");
    return digits_[static_cast<std::size_t>(pos - valuation_)];
  }

 private:
  friend class ElementAccess;

  FieldElement(const FieldSpec& spec, int v, std::vector<Digit> digits)
      : spec_(spec), valuation_(v), digits_(std::move(digits)) {}

  FieldSpec spec_{};
  int valuation_ = 0;
  std::vector<Digit> digits_;  // empty <=> zero; digits_[0] != 0 otherwise
};

// Raw construction for the arithmetic kernels below; callers guarantee a
// normalized digit vector.
class ElementAccess {
 public:
  static FieldElement make(const FieldSpec& spec, int v, std::vector<Digit> digits) {
    return FieldElement(spec, v, std::move(digits));
  }
};

inline int valuation(const FieldElement& x) { return x.valuation(); }
inline int norm_exponent(const FieldElement& x) { return x.valuation(); }

namespace detail {

inline void require_same_spec(const FieldElement& x, const FieldElement& y) {
  if (!(x.spec() == y.spec())) throw std::invalid_argument("field elements from different field specs");
}

// Strips leading zeros of a raw digit window starting at position v0 and
// returns the normalized element.
inline FieldElement normalize_window(const FieldSpec& spec, int v0, std::vector<Digit>& window,
                                     bool enforce_floor) {
  std::size_t lead = 0;
  while (lead < window.size() && window[lead] == 0) ++lead;
  if (lead == window.size()) return FieldElement::zero(spec);
  const int sig = static_cast<int>(window.size() - lead);
  if (enforce_floor && sig < spec.floor()) {
    throw PrecisionExhausted("only " + std::to_string(sig) + " significant digits survive cancellation");
  }
  window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(lead));
  return ElementAccess::make(spec, v0 + static_cast<int>(lead), std::move(window));
}

inline FieldElement add(const FieldElement& x, const FieldElement& y, bool enforce_floor) {
  require_same_spec(x, y);
  if (x.is_zero()) return y;
  if (y.is_zero()) return x;
  const FieldSpec& spec = x.spec();
  const int v0 = std::min(x.valuation(), y.valuation());
  const int top = std::min(x.absolute_precision(), y.absolute_precision());
  const auto len = static_cast<std::size_t>(top - v0);
  std::vector<Digit> window(len, 0);
  const Digit p = spec.p;
  const auto xd = x.digits();
  const auto yd = y.digits();
  const auto x_off = static_cast<std::ptrdiff_t>(x.valuation() - v0);
  const auto y_off = static_cast<std::ptrdiff_t>(y.valuation() - v0);
  Digit carry = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    std::uint64_t sum = carry;
    if (ii >= x_off) sum += xd[static_cast<std::size_t>(ii - x_off)];
    if (ii >= y_off) sum += yd[static_cast<std::size_t>(ii - y_off)];
    if (sum >= p) {
      window[i] = static_cast<Digit>(sum - p);
      carry = spec.kind == FieldKind::padic ? 1 : 0;
    } else {
      window[i] = static_cast<Digit>(sum);
      carry = 0;
    }
  }
  return normalize_window(spec, v0, window, enforce_floor);
}

}  // namespace detail

inline FieldElement add(const FieldElement& x, const FieldElement& y) { return detail::add(x, y, true); }

inline FieldElement neg(const FieldElement& x) {
  if (x.is_zero()) return x;
  const Digit p = x.spec().p;
  std::vector<Digit> digits(x.digits().begin(), x.digits().end());
  if (x.spec().kind == FieldKind::padic) {
    // p^s - u: the first digit is nonzero so no borrow ripples past it.
    digits[0] = p - digits[0];
    for (std::size_t i = 1; i < digits.size(); ++i) digits[i] = p - 1 - digits[i];
  } else {
    for (auto& d : digits) d = (p - d) % p;
  }
  return ElementAccess::make(x.spec(), x.valuation(), std::move(digits));
}

inline FieldElement sub(const FieldElement& x, const FieldElement& y) { return add(x, neg(y)); }

inline FieldElement mul(const FieldElement& x, const FieldElement& y) {
  detail::require_same_spec(x, y);
  if (x.is_zero() || y.is_zero()) return FieldElement::zero(x.spec());
  const FieldSpec& spec = x.spec();
  const Digit p = spec.p;
  const auto xd = x.digits();
  const auto yd = y.digits();
  const std::size_t sig = std::min(xd.size(), yd.size());
  std::vector<Digit> out(sig);
  // Column sums of the truncated convolution; the carry is at most
  // sig * p, so everything fits comfortably in 64 bits for p < 2^16.
  std::uint64_t carry = 0;
  for (std::size_t k = 0; k < sig; ++k) {
    std::uint64_t column = carry;
    for (std::size_t i = 0; i <= k; ++i) column += std::uint64_t{xd[i]} * yd[k - i];
    out[k] = static_cast<Digit>(column % p);
    carry = spec.kind == FieldKind::padic ? column / p : 0;
  }
  return ElementAccess::make(spec, x.valuation() + y.valuation(), std::move(out));
}

// Digit-wise long division of 1 by the unit part, seeded with the residue
// inverse of d0.
inline FieldElement inv(const FieldElement& x) {
  if (x.is_zero()) throw DivisionByZero("inverse of zero");
  const FieldSpec& spec = x.spec();
  const Digit p = spec.p;
  const auto u = x.digits();
  const std::size_t sig = u.size();
  const Digit d0_inv = detail::residue_inverse(u[0], p);

  // remainder = 1 - u * y as raw digit columns; column k is normalized just
  // before it determines y_k. Columns stay below sig * p^2 in magnitude.
  const auto sp = static_cast<std::int64_t>(p);
  std::vector<std::int64_t> rem(sig, 0);
  rem[0] = 1;
  std::vector<Digit> y(sig, 0);
  auto floor_div = [sp](std::int64_t a) { return a / sp - (a % sp < 0 ? 1 : 0); };
  for (std::size_t k = 0; k < sig; ++k) {
    const std::int64_t carry = floor_div(rem[k]);
    const std::int64_t r = rem[k] - carry * sp;
    const bool carries = spec.kind == FieldKind::padic && k + 1 < sig;
    if (carries) rem[k + 1] += carry;
    const Digit yk = static_cast<Digit>((static_cast<std::uint64_t>(r) * d0_inv) % p);
    y[k] = yk;
    if (yk == 0) continue;
    for (std::size_t i = 1; i + k < sig; ++i) rem[k + i] -= static_cast<std::int64_t>(yk) * u[i];
    // r - yk * u0 is an exact multiple of p
    if (carries) rem[k + 1] += (r - static_cast<std::int64_t>(yk) * u[0]) / sp;
  }
  return ElementAccess::make(spec, -x.valuation(), std::move(y));
}

inline FieldElement div(const FieldElement& x, const FieldElement& y) { return mul(x, inv(y)); }

inline FieldElement operator+(const FieldElement& x, const FieldElement& y) { return add(x, y); }
inline FieldElement operator-(const FieldElement& x, const FieldElement& y) { return sub(x, y); }
inline FieldElement operator-(const FieldElement& x) { return neg(x); }
inline FieldElement operator*(const FieldElement& x, const FieldElement& y) { return mul(x, y); }
inline FieldElement operator/(const FieldElement& x, const FieldElement& y) { return div(x, y); }

// x == y on every digit known for both operands. Never throws for lost
// precision.
inline bool equal_at_precision(const FieldElement& x, const FieldElement& y) {
  return detail::add(x, neg(y), false).is_zero();
}

// Re-expresses x in `target`, which may carry a different precision (same
// kind and p). Digits beyond the new precision are dropped; nothing is
// invented when the target is wider.
inline FieldElement with_precision(const FieldElement& x, const FieldSpec& target) {
  if (x.spec().kind != target.kind || x.spec().p != target.p) {
    throw std::invalid_argument("with_precision: field kind or p differs");
  }
  if (x.is_zero()) return FieldElement::zero(target);
  const auto keep = std::min(x.digits().size(), static_cast<std::size_t>(target.precision));
  return ElementAccess::make(target, x.valuation(), std::vector<Digit>(x.digits().begin(), x.digits().begin() + keep));
}

// Exact digit-for-digit identity (same valuation, same known digits).
inline bool identical(const FieldElement& x, const FieldElement& y) {
  if (!(x.spec() == y.spec()) || x.is_zero() != y.is_zero()) return false;
  if (x.is_zero()) return true;
  return x.valuation() == y.valuation() && std::ranges::equal(x.digits(), y.digits());
}

// Canonical image of the integer a.
inline FieldElement embed_integer(const FieldSpec& spec, std::int64_t a) {
  if (a == 0) return FieldElement::zero(spec);
  const Digit p = spec.p;
  if (spec.kind == FieldKind::laurent) {
    std::int64_t r = a % static_cast<std::int64_t>(p);
    if (r < 0) r += p;
    const Digit d = static_cast<Digit>(r);
    return FieldElement::from_digits(spec, 0, std::span<const Digit>(&d, 1));
  }
  // |a| as base-p digits; INT64_MIN is handled through the unsigned type.
  std::uint64_t mag = a < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(a) : static_cast<std::uint64_t>(a);
  std::vector<Digit> digits;
  while (mag != 0) {
    digits.push_back(static_cast<Digit>(mag % p));
    mag /= p;
  }
  const FieldElement x = FieldElement::from_digits(spec, 0, digits);
  return a < 0 ? neg(x) : x;
}

// Canonical image of a/b.
inline FieldElement embed_rational(const FieldSpec& spec, std::int64_t a, std::int64_t b) {
  if (b == 0) throw DivisionByZero("rational with zero denominator");
  const FieldElement den = embed_integer(spec, b);
  if (den.is_zero()) throw DivisionByZero("denominator vanishes in the residue field");
  return div(embed_integer(spec, a), den);
}

// Uniform sample from the ball pi^t O: digit positions t, t+1, ... are
// independent and uniform. Leading zero digits are skipped and replaced by
// fresh draws so the result keeps full relative precision.
template <class Rng>
FieldElement haar_sample(const FieldSpec& spec, Rng& rng, int t) {
  std::uniform_int_distribution<Digit> digit(0, spec.p - 1);
  const auto n = static_cast<std::size_t>(spec.precision);
  std::vector<Digit> raw(n);
  for (auto& d : raw) d = digit(rng);
  std::size_t lead = 0;
  while (lead < n && raw[lead] == 0) ++lead;
  if (lead == n) return FieldElement::zero(spec);
  raw.erase(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(lead));
  while (raw.size() < n) raw.push_back(digit(rng));
  return ElementAccess::make(spec, t + static_cast<int>(lead), std::move(raw));
}

// Digits of x at absolute positions v_min .. t-1. Within the ball
// pi^v_min O two elements share a key iff ||x - y|| <= q^-t.
using PrefixKey = std::vector<Digit>;

inline PrefixKey digit_prefix(const FieldElement& x, int t, int v_min) {
  if (t <= v_min) return {};
  if (!x.is_zero()) {
    if (x.valuation() < v_min) throw std::invalid_argument("element lies outside the ball pi^v_min O");
    if (t > x.absolute_precision()) {
      throw PrecisionExhausted("prefix to position " + std::to_string(t) + " exceeds known precision " +
                               std::to_string(x.absolute_precision()));
    }
  }
  PrefixKey key(static_cast<std::size_t>(t - v_min));
  for (int pos = v_min; pos < t; ++pos) key[static_cast<std::size_t>(pos - v_min)] = x.digit_at(pos);
  return key;
}

// Literal grammar:  [+-]digits | [+-]a/b | pi^v*(d0,d1,...,dk)
inline FieldElement parse_literal(const FieldSpec& spec, std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t value = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
      throw ParseError("malformed integer '" + std::string(s) + "' in literal '" + std::string(text) + "'");
    }
    return value;
  };

  const std::string_view body = trim(text);
  if (body.starts_with("pi^")) {
    const auto star = body.find("*(");
    if (star == std::string_view::npos || body.back() != ')') {
      throw ParseError("digit literal must look like pi^v*(d0,d1,...): '" + std::string(text) + "'");
    }
    const auto v = parse_int(body.substr(3, star - 3));
    std::string_view list = body.substr(star + 2, body.size() - star - 3);
    std::vector<Digit> digits;
    while (true) {
      const auto comma = list.find(',');
      const auto d = parse_int(list.substr(0, comma));
      if (d < 0 || d >= spec.p) {
        throw ParseError("digit " + std::to_string(d) + " outside [0, p) in '" + std::string(text) + "'");
      }
      digits.push_back(static_cast<Digit>(d));
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
    }
    return FieldElement::from_digits(spec, static_cast<int>(v), digits);
  }
  if (const auto slash = body.find('/'); slash != std::string_view::npos) {
    const auto a = parse_int(body.substr(0, slash));
    const auto b = parse_int(body.substr(slash + 1));
    try {
      return embed_rational(spec, a, b);
    } catch (const DivisionByZero& e) {
      throw ParseError(std::string(e.what()) + " in literal '" + std::string(text) + "'");
    }
  }
  return embed_integer(spec, parse_int(body));
}

// Inverse of parse_literal up to trailing zero digits.
inline std::string to_literal(const FieldElement& x) {
  if (x.is_zero()) return "0";
  auto digits = x.digits();
  std::size_t len = digits.size();
  while (len > 1 && digits[len - 1] == 0) --len;
  std::string out = "pi^" + std::to_string(x.valuation()) + "*(";
  for (std::size_t i = 0; i < len; ++i) {
    if (i) out += ',';
    out += std::to_string(digits[i]);
  }
  out += ')';
  return out;
}

}  // namespace nadim
