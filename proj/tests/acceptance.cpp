// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "nadim/attractor.hpp"
#include "nadim/field.hpp"
#include "nadim/linalg.hpp"
#include "nadim/pressure.hpp"
#include "nadim/svd.hpp"
#include "nadim/svf.hpp"
#include "support.hpp"

using namespace nadim;
using nadim::testing::all_backends;
using nadim::testing::diag_monomials;
using nadim::testing::random_element;
using nadim::testing::random_nonsingular;
using nadim::testing::tied_matrix;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Norm axioms, integer valuations, zero tolerance.

Outcome field_axioms() {
  constexpr int kPairs = 10000;
  std::uint64_t checked = 0, failures = 0;
  for (const auto& spec : all_backends()) {
    std::mt19937_64 rng(1000 + spec.p + 100 * static_cast<int>(spec.kind));
    std::uniform_int_distribution<int> zero_pick(0, 49);
    for (int i = 0; i < kPairs; ++i) {
      // About one operand in fifty is exactly zero.
      const FieldElement x = zero_pick(rng) == 0 ? FieldElement::zero(spec) : random_element(spec, rng, -5, 5);
      const FieldElement y = zero_pick(rng) == 0 ? FieldElement::zero(spec) : random_element(spec, rng, -5, 5);
      const int vx = x.valuation(), vy = y.valuation();
      bool ok = (vx == kInfiniteValuation) == x.is_zero() && (vy == kInfiniteValuation) == y.is_zero();
      const FieldElement xy = x * y;
      if (x.is_zero() || y.is_zero()) {
        ok = ok && xy.is_zero();
      } else {
        ok = ok && xy.valuation() == vx + vy;
      }
      const int vs = (x + y).valuation();
      const int lo = std::min(vx, vy);
      ok = ok && vs >= lo;
      if (vx != vy) ok = ok && vs == lo;
      failures += ok ? 0 : 1;
      ++checked;
    }
  }
  return {failures == 0, std::to_string(checked) + " pairs over 5 backends, " + std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------
// 2 and 3 share the same matrices.

std::vector<Matrix> svd_matrices(const FieldSpec& spec) {
  std::mt19937_64 rng(2000 + spec.p + 100 * static_cast<int>(spec.kind));
  std::vector<Matrix> out;
  for (int i = 0; i < 500; ++i) out.push_back(random_nonsingular(spec, 1 + i % 4, rng));
  return out;
}

Outcome svd_reconstruction(const std::vector<std::vector<Matrix>>& sets) {
  const auto start = Clock::now();
  std::uint64_t failures = 0, total = 0;
  for (const auto& set : sets) {
    for (const Matrix& t : set) {
      const SingularDecomposition d = svd(t);
      const bool ok = equal_at_precision(mat_mul(mat_mul(d.P, d.D), d.Q), t) && is_isometry(d.P) && is_isometry(d.Q);
      failures += ok ? 0 : 1;
      ++total;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << total << " matrices, " << failures << " failures, " << elapsed << " s (limit 10 s)";
  return {failures == 0 && elapsed <= 10.0, detail.str()};
}

Outcome svd_minor_oracle(const std::vector<std::vector<Matrix>>& sets) {
  std::uint64_t failures = 0, total = 0;
  for (const auto& set : sets) {
    for (const Matrix& t : set) {
      failures += svd(t).valuations == singular_valuations_by_minors(t) ? 0 : 1;
      ++total;
    }
  }
  return {failures == 0, std::to_string(total) + " matrices, " + std::to_string(failures) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 4. Randomized tie-breaking on matrices whose entries all share one norm.

Outcome svd_uniqueness() {
  std::uint64_t failures = 0, total = 0;
  for (const auto& spec : all_backends()) {
    std::mt19937_64 rng(4000 + spec.p + 100 * static_cast<int>(spec.kind));
    for (int i = 0; i < 200; ++i) {
      const Matrix t = tied_matrix(spec, 2 + i % 3, rng);
      const auto reference = singular_valuations_by_minors(t);
      bool ok = svd_uniqueness_probe(t, rng);
      for (int rep = 0; rep < 3; ++rep) ok = ok && svd(t, rng).valuations == reference;
      failures += ok ? 0 : 1;
      ++total;
    }
  }
  return {failures == 0, std::to_string(total) + " tied matrices, " + std::to_string(failures) + " disagreements"};
}

// ---------------------------------------------------------------------------
// 5. phi^s(TU) <= phi^s(T) phi^s(U), equality above the dimension.

Outcome submultiplicativity() {
  std::uint64_t failures = 0, equality_failures = 0, total = 0;
  for (const auto& spec : all_backends()) {
    std::mt19937_64 rng(5000 + spec.p + 100 * static_cast<int>(spec.kind));
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 1 + i % 4;
      const Matrix t = random_nonsingular(spec, n, rng);
      const Matrix u = random_nonsingular(spec, n, rng);
      std::vector<double> grid;
      for (std::size_t j = 1; j <= 8 * n; ++j) grid.push_back(0.25 * static_cast<double>(j));
      failures += check_submultiplicative(t, u, grid) ? 0 : 1;
      const auto vt = singular_valuations(t), vu = singular_valuations(u), vtu = singular_valuations(mat_mul(t, u));
      for (const double s : grid) {
        if (s <= static_cast<double>(n)) continue;
        bool equal = true;
        if (is_integer_exponent(s)) {
          const auto k = static_cast<std::int64_t>(s);
          equal = scaled_phi_log(vtu, k) == scaled_phi_log(vt, k) + scaled_phi_log(vu, k);
        } else {
          const double lhs = phi_log(vtu, s, spec.q()).log_q_value;
          const double rhs = phi_log(vt, s, spec.q()).log_q_value + phi_log(vu, s, spec.q()).log_q_value;
          equal = std::abs(lhs - rhs) <= kLogTolerance * std::max(1.0, std::abs(rhs));
        }
        equality_failures += equal ? 0 : 1;
      }
      ++total;
    }
  }
  return {failures == 0 && equality_failures == 0,
          std::to_string(total) + " pairs, " + std::to_string(failures) + " violations, " +
              std::to_string(equality_failures) + " equality-branch misses"};
}

// ---------------------------------------------------------------------------
// 6. Similarity systems with closed-form critical exponents.

WordSpace similarity(const FieldSpec& spec, std::size_t m, const std::vector<int>& diag) {
  return WordSpace(std::vector<Matrix>(m, diag_monomials(spec, diag)));
}

Outcome similarity_brackets() {
  const auto start = Clock::now();
  std::ostringstream detail;
  detail.precision(12);
  bool ok = true;

  const double d2 = std::log(2.0) / std::log(3.0);
  const auto b2 = critical_exponent(similarity(padic_spec(3), 2, {1}), 1, 1e-9);
  ok = ok && std::abs(b2.s_lower - d2) <= 1e-9 && std::abs(b2.s_upper - d2) <= 1e-9;
  detail << "q=3,M=2,k=1: [" << b2.s_lower << ", " << b2.s_upper << "]; ";

  const auto b3 = critical_exponent(similarity(padic_spec(3), 3, {1}), 12, 1e-9);
  ok = ok && std::abs(b3.s_lower - 1.0) <= 1e-9 && std::abs(b3.s_upper - 1.0) <= 1e-9;
  detail << "q=3,M=3,k=12: [" << b3.s_lower << ", " << b3.s_upper << "]; ";

  const double dd = (1.0 + std::log2(3.0)) / 2.0;
  const auto bd = critical_exponent(similarity(padic_spec(2), 3, {1, 2}), 8, 1e-9);
  ok = ok && std::abs(bd.s_upper - dd) <= 1e-6 && bd.s_lower <= dd;
  detail << "q=2,M=3,diag(pi,pi^2),k=8: s_upper=" << bd.s_upper << " vs " << dd << "; ";

  const double elapsed = seconds_since(start);
  detail << elapsed << " s (limit 5 s)";
  return {ok && elapsed <= 5.0, detail.str()};
}

// ---------------------------------------------------------------------------
// 7. Exact box counts.

Aifs line_system(const FieldSpec& spec, const std::vector<std::int64_t>& bs) {
  std::vector<Matrix> maps(bs.size(), diag_monomials(spec, {1}));
  std::vector<Vector> translations;
  for (const auto b : bs) translations.push_back({embed_integer(spec, b)});
  return Aifs(WordSpace(maps), translations);
}

Outcome exact_box_counts() {
  bool ok = true;
  std::ostringstream detail;
  detail.precision(15);
  const Aifs cantor = line_system(padic_spec(3), {0, 1});
  const auto est = box_dimension_estimate(cantor, 1, 12);
  for (const auto& row : est.table.rows) ok = ok && row.count == (std::uint64_t{1} << row.t);
  const double d = std::log(2.0) / std::log(3.0);
  ok = ok && std::abs(est.slope - d) <= 1e-12;
  detail << "cantor N_1..N_12 = 2^t: " << (ok ? "yes" : "no") << ", slope " << est.slope << "; ";

  const Aifs ball = line_system(padic_spec(2), {0, 1});
  const auto full = box_dimension_estimate(ball, 1, 12);
  bool ball_ok = true;
  for (const auto& row : full.table.rows) ball_ok = ball_ok && row.count == (std::uint64_t{1} << row.t);
  // The slope of exact powers of q is 1 up to floating-point rounding of the fit.
  ball_ok = ball_ok && std::abs(full.slope - 1.0) <= 1e-12;
  detail << "full ball N_t = 2^t: " << (ball_ok ? "yes" : "no") << ", slope " << full.slope;
  return {ok && ball_ok, detail.str()};
}

// ---------------------------------------------------------------------------
// 8. Upper bound for every translation vector, adversarial and random.

struct TestSystem {
  std::string name;
  WordSpace ws;
  int k_max;
  int t_min;
  int t_max;
};

std::vector<TestSystem> test_systems() {
  std::vector<TestSystem> out;
  out.push_back({"cantor q=3 M=2", similarity(padic_spec(3), 2, {1}), 12, 4, 12});
  out.push_back({"line q=3 M=3", similarity(padic_spec(3), 3, {1}), 10, 4, 10});
  out.push_back({"diag q=2 M=3", similarity(padic_spec(2), 3, {1, 2}), 8, 4, 10});
  {
    const auto spec = padic_spec(2);
    Matrix a(spec, 2, 2), b(spec, 2, 2);
    a(0, 0) = FieldElement::monomial(spec, 1);
    a(0, 1) = FieldElement::monomial(spec, 1);
    a(1, 1) = FieldElement::monomial(spec, 3);
    b(0, 0) = FieldElement::monomial(spec, 2);
    b(1, 0) = FieldElement::monomial(spec, 1);
    b(1, 1) = FieldElement::monomial(spec, 1);
    out.push_back({"mixed q=2 M=2", WordSpace({a, b}), 12, 4, 10});
  }
  {
    const auto spec = laurent_spec(3, 32);
    Matrix a(spec, 2, 2), b(spec, 2, 2);
    a(0, 0) = FieldElement::monomial(spec, 1);
    a(0, 1) = FieldElement::monomial(spec, 2);
    a(1, 1) = FieldElement::monomial(spec, 2);
    b(0, 0) = FieldElement::monomial(spec, 2);
    b(1, 0) = FieldElement::monomial(spec, 1);
    b(1, 1) = FieldElement::monomial(spec, 1);
    out.push_back({"laurent q=3 M=2", WordSpace({a, b}), 12, 3, 8});
  }
  return out;
}

// Deterministic families that stress the estimator: coincident points,
// differences hidden in deep digits, large translations, and translations
// confined to a coordinate axis.
std::vector<Vector> adversarial_translations(const WordSpace& ws, int index, std::mt19937_64& rng) {
  const FieldSpec& spec = ws.spec();
  const std::size_t m = ws.alphabet_size(), n = ws.dimension();
  std::vector<Vector> out(m, Vector(n, FieldElement::zero(spec)));
  const Vector base = [&] {
    Vector v;
    for (std::size_t j = 0; j < n; ++j) v.push_back(haar_sample(spec, rng, 0));
    return v;
  }();
  switch (index % 5) {
    case 0:  // all maps share one translation
      for (auto& b : out) b = base;
      break;
    case 1: {  // differences only below digit depth 3..6
      const int depth = 3 + index % 4;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = base[j] + haar_sample(spec, rng, depth);
      break;
    }
    case 2: {  // translations of norm up to q^3
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = haar_sample(spec, rng, -3);
      break;
    }
    case 3:  // only the first coordinate moves
      for (std::size_t i = 0; i < m; ++i) out[i][0] = haar_sample(spec, rng, 0);
      break;
    default: {  // digit-restriction pattern: b_i = i
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = embed_integer(spec, static_cast<std::int64_t>(i));
      break;
    }
  }
  return out;
}

Outcome upper_bound() {
  constexpr double kSlack = 0.02;
  // Translations of norm q^3 push the walk to depth t+3; 3^13 leaves need
  // more than the default cap.
  BoxCountOptions box;
  box.node_cap = 20'000'000;
  std::ostringstream detail;
  detail.precision(6);
  bool ok = true;
  std::uint64_t total = 0;
  for (const TestSystem& sys : test_systems()) {
    const PressureBracket bracket = critical_exponent(sys.ws, sys.k_max, 1e-9);
    double worst = -INFINITY;
    int violations = 0;
    for (int i = 0; i < 40; ++i) {
      std::mt19937_64 rng = trial_rng(8000 + total, static_cast<std::uint64_t>(i));
      const auto translations = i < 20 ? adversarial_translations(sys.ws, i, rng) : haar_translations(sys.ws, rng);
      const double est = box_dimension_estimate(Aifs(sys.ws, translations), sys.t_min, sys.t_max, box).slope;
      worst = std::max(worst, est - bracket.s_upper);
      violations += est > bracket.s_upper + kSlack ? 1 : 0;
    }
    ++total;
    ok = ok && violations == 0;
    detail << sys.name << ": s_upper=" << bracket.s_upper << " max(est-s_upper)=" << worst
           << " violations=" << violations << "; ";
  }
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------
// 9. Haar-random translations reproduce min(n, d).

Outcome almost_everywhere() {
  ExperimentOptions opts;
  opts.t_min = 4;
  opts.t_max = 12;
  opts.k_max = 12;
  const auto rep = random_translation_experiment(similarity(padic_spec(3), 2, {1}), 20, 0, opts);
  std::ostringstream detail;
  detail.precision(6);
  double worst = 0;
  for (const auto& t : rep.trials) worst = std::max(worst, std::abs(t.deviation));
  detail << rep.within_band << "/20 within 0.05 of " << rep.target << ", max |deviation| " << worst;
  return {rep.within_band >= 18, detail.str()};
}

// ---------------------------------------------------------------------------
// 10. Monte-Carlo potential integral.

Outcome potential_integral() {
  std::ostringstream detail;
  detail.precision(6);
  const double q = 3.0, s = 0.5;
  const double exact = (1 - 1 / q) / (1 - std::pow(q, s - 1));
  auto rng = trial_rng(10, 0);
  const auto est = potential_integral_mc(Matrix::identity(padic_spec(3), 1), s, 100000, rng);
  const double z = std::abs(est.mean - exact) / est.standard_error;
  const bool first = z <= 3.0;
  detail << "T=I: mean " << est.mean << " vs shell sum " << exact << " (" << z << " SE); ";

  const auto spec = padic_spec(3);
  double lo = INFINITY, hi = 0;
  for (int i = 0; i < 50; ++i) {
    auto trial = trial_rng(10, 1 + static_cast<std::uint64_t>(i));
    const Matrix t = random_nonsingular(spec, 2, trial, 1, 3);
    const auto mc = potential_integral_mc(t, 1.5, 20000, trial);
    const double ratio = mc.mean * phi(t, 1.5).value();
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const bool second = hi / lo <= 100.0;
  detail << "50 contractive T (n=2, s=1.5): estimate*phi in [" << lo << ", " << hi << "], ratio " << hi / lo;
  return {first && second, detail.str()};
}

// ---------------------------------------------------------------------------
// 11. `verify` is byte-identical across repeats and worker counts.

std::pair<int, std::string> run_cli(const std::string& args) {
  const std::string command = std::string(NADIM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

Outcome determinism() {
  bool ok = true;
  std::ostringstream detail;
  for (const char* name : {"cantor.json", "laurent.json", "diagonal.json"}) {
    const std::string base = std::string("verify --config ") + NADIM_CONFIG_DIR + "/" + name;
    const auto a = run_cli(base + " --workers 1");
    const auto b = run_cli(base + " --workers 1");
    const auto c = run_cli(base + " --workers 4");
    const bool same = a.first == 0 && !a.second.empty() && a == b && a == c;
    ok = ok && same;
    detail << name << ": " << (same ? "identical" : "DIFFERENT") << " (" << a.second.size() << " bytes); ";
  }
  return {ok, detail.str()};
}

}  // namespace

int main() {
  std::vector<std::vector<Matrix>> svd_sets;
  for (const auto& spec : all_backends()) svd_sets.push_back(svd_matrices(spec));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 field axioms", field_axioms},
      {"2 svd reconstruction and isometry", [&] { return svd_reconstruction(svd_sets); }},
      {"3 svd equals minor oracle", [&] { return svd_minor_oracle(svd_sets); }},
      {"4 singular value uniqueness", svd_uniqueness},
      {"5 phi submultiplicativity", submultiplicativity},
      {"6 similarity critical exponents", similarity_brackets},
      {"7 exact box counting", exact_box_counts},
      {"8 box dimension upper bound", upper_bound},
      {"9 almost-everywhere equality", almost_everywhere},
      {"10 potential integral", potential_integral},
      {"11 deterministic verify", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << name << ": " << o.detail << " ["
              << seconds_since(start) << " s]" << std::endl;
    failed += o.passed ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
