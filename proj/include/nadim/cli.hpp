#pragma once

// Configuration loading, command dispatch and JSON/CSV report rendering for
// the `nadim` executable. Everything a report prints is a function of the
// config and the flags, never of the worker count or the wall clock.
//
// Config schema:
//
//   {
//     "field":   {"kind": "padic" | "laurent", "p": 3, "precision": 64},
//     "n":       1,
//     "maps":    [{"T": [["3"]], "b": ["0"]}, {"T": [["3"]], "b": ["1"]}],
//     "budgets": {"k_max": 12, "node_cap": 2000000, "precision": 64, "tolerance": 1e-9},
//     "seed":    0
//   }
//
// "budgets" and "seed" are optional, as is every budget entry.
// budgets.precision, when present, overrides field.precision.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nadim/attractor.hpp"
#include "nadim/errors.hpp"
#include "nadim/field.hpp"
#include "nadim/linalg.hpp"
#include "nadim/pressure.hpp"
#include "nadim/svd.hpp"
#include "nadim/svf.hpp"

namespace nadim::cli {

using Json = nlohmann::ordered_json;

struct Budgets {
  std::optional<int> k_max;  // unset: largest depth within 10^6 words, at most 12
  std::uint64_t node_cap = 2'000'000;
  double tolerance = 1e-9;
};

struct SystemConfig {
  FieldSpec field;
  std::size_t n = 0;
  std::vector<Matrix> maps;
  std::vector<Vector> translations;
  Budgets budgets;
  std::uint64_t seed = 0;

  WordSpace word_space() const { return WordSpace(maps); }
  Aifs aifs() const { return Aifs(word_space(), translations); }
};

namespace detail {

inline const Json& member(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing");
  return *it;
}

inline std::int64_t integer(const Json& j, const std::string& path, std::int64_t lo, std::int64_t hi) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > hi) {
    throw ParseError(path + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     "]");
  }
  return v;
}

inline FieldElement literal(const FieldSpec& spec, const Json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": entry literals must be strings");
  try {
    return parse_literal(spec, j.get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Vector literal_row(const FieldSpec& spec, const Json& j, std::size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) throw ParseError(path + ": expected " + std::to_string(n) + " entries");
  Vector out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(literal(spec, j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// 1-based line of a byte offset reported by the JSON parser.
inline std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace detail

// What parse_config checks beyond well-formedness. `maps_only` skips the
// contractivity requirement so that per-map commands (svd, phi) accept any
// non-singular matrix, e.g. the identity.
enum class ConfigCheck { attractor, maps_only };

inline SystemConfig parse_config_text(const std::string& text, ConfigCheck check = ConfigCheck::attractor) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)) + ": malformed JSON (" + e.what() + ")");
  }
  SystemConfig cfg;

  const Json& field = detail::member(root, "field", "config");
  const Json& kind = detail::member(field, "kind", "field");
  if (kind == "padic") {
    cfg.field.kind = FieldKind::padic;
  } else if (kind == "laurent") {
    cfg.field.kind = FieldKind::laurent;
  } else {
    throw ParseError("field.kind: expected \"padic\" or \"laurent\"");
  }
  cfg.field.p = static_cast<Digit>(detail::integer(detail::member(field, "p", "field"), "field.p", 2, FieldSpec::kMaxPrime));
  if (field.contains("precision")) {
    cfg.field.precision = static_cast<int>(detail::integer(field["precision"], "field.precision", 1, 4096));
  }
  if (root.contains("budgets")) {
    const Json& b = root["budgets"];
    if (!b.is_object()) throw ParseError("budgets: expected an object");
    if (b.contains("k_max")) cfg.budgets.k_max = static_cast<int>(detail::integer(b["k_max"], "budgets.k_max", 1, 64));
    if (b.contains("node_cap")) {
      cfg.budgets.node_cap = static_cast<std::uint64_t>(
          detail::integer(b["node_cap"], "budgets.node_cap", 1, std::numeric_limits<std::int64_t>::max()));
    }
    if (b.contains("precision")) {
      cfg.field.precision = static_cast<int>(detail::integer(b["precision"], "budgets.precision", 1, 4096));
    }
    if (b.contains("tolerance")) {
      if (!b["tolerance"].is_number() || !(b["tolerance"].get<double>() > 0)) {
        throw ParseError("budgets.tolerance: expected a positive number");
      }
      cfg.budgets.tolerance = b["tolerance"].get<double>();
    }
  }
  cfg.field.validate();

  cfg.n = static_cast<std::size_t>(detail::integer(detail::member(root, "n", "config"), "n", 1, 64));
  const Json& maps = detail::member(root, "maps", "config");
  if (!maps.is_array() || maps.size() < 2) throw ParseError("maps: expected an array of at least two maps");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::string path = "maps[" + std::to_string(i) + "]";
    const Json& t = detail::member(maps[i], "T", path);
    if (!t.is_array() || t.size() != cfg.n) throw ParseError(path + ".T: expected " + std::to_string(cfg.n) + " rows");
    Matrix m(cfg.field, cfg.n, cfg.n);
    for (std::size_t r = 0; r < cfg.n; ++r) {
      const Vector row = detail::literal_row(cfg.field, t[r], cfg.n, path + ".T[" + std::to_string(r) + "]");
      for (std::size_t c = 0; c < cfg.n; ++c) m(r, c) = row[c];
    }
    cfg.maps.push_back(std::move(m));
    cfg.translations.push_back(detail::literal_row(cfg.field, detail::member(maps[i], "b", path), cfg.n, path + ".b"));
  }
  if (root.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(
        detail::integer(root["seed"], "seed", 0, std::numeric_limits<std::int64_t>::max()));
  }
  if (check == ConfigCheck::attractor) {
    (void)cfg.aifs();
  } else {
    for (std::size_t i = 0; i < cfg.maps.size(); ++i) {
      if (det(cfg.maps[i]).is_zero()) throw SingularMap("map " + std::to_string(i + 1) + " is singular");
    }
  }
  return cfg;
}

inline SystemConfig parse_config(const std::string& path, ConfigCheck check = ConfigCheck::attractor) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), check);
}

struct Flags {
  std::optional<double> s;
  std::optional<int> k_max;
  std::optional<int> t_min;
  std::optional<int> t_max;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  unsigned workers = 1;
  std::string format = "json";
};

struct Report {
  std::string body;
  int exit_code = 0;
};

enum ExitCode : int { kOk = 0, kInvalid = 2, kPrecision = 3, kBudget = 4, kInternal = 5 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PrecisionExhausted*>(&e)) return kPrecision;
  if (dynamic_cast<const BudgetExceeded*>(&e)) return kBudget;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ContractivityViolation*>(&e) ||
      dynamic_cast<const SingularMap*>(&e) || dynamic_cast<const NonPrimeP*>(&e) ||
      dynamic_cast<const NegativeExponent*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) {
    return kInvalid;
  }
  return kInternal;
}

namespace detail {

inline std::string render_norm(std::uint32_t q, int v) {
  if (v == kInfiniteValuation) return "0";
  return std::to_string(q) + "^" + std::to_string(-v);
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(to_literal(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json valuations_json(const std::vector<int>& v, std::uint32_t q) {
  Json out = Json::object();
  out["valuations"] = v;
  Json norms = Json::array();
  for (const int x : v) norms.push_back(render_norm(q, x));
  out["norms"] = std::move(norms);
  return out;
}

inline Json field_json(const FieldSpec& f) {
  return Json{{"kind", std::string(to_string(f.kind))}, {"p", f.p}, {"precision", f.precision}};
}

inline Json bracket_json(const PressureBracket& b) {
  Json profile = Json::array();
  for (const auto& pt : b.profile) profile.push_back(Json{{"s", pt.s}, {"f", pt.f}});
  return Json{{"k", b.k},          {"s_lower", b.s_lower}, {"s_upper", b.s_upper},
              {"roots", b.roots},  {"profile", profile},   {"nodes", b.nodes}};
}

inline Json box_rows_json(const std::vector<BoxCount>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(Json{{"t", r.t}, {"N_t", r.count}, {"words_expanded", r.words_expanded}});
  return out;
}

inline int k_max_for(const SystemConfig& cfg, const Flags& flags) {
  if (flags.k_max) return *flags.k_max;
  if (cfg.budgets.k_max) return *cfg.budgets.k_max;
  return default_k_max(cfg.maps.size());
}

inline std::uint64_t seed_for(const SystemConfig& cfg, const Flags& flags) {
  return flags.seed ? *flags.seed : cfg.seed;
}

inline double require_s(const Flags& flags, const char* cmd) {
  if (!flags.s) throw std::invalid_argument(std::string(cmd) + " needs --s");
  return *flags.s;
}

inline Json command_svd(const SystemConfig& cfg) {
  Json maps = Json::array();
  for (std::size_t i = 0; i < cfg.maps.size(); ++i) {
    const Matrix& t = cfg.maps[i];
    const SingularDecomposition d = svd(t);
    Json entry{{"map", i + 1}};
    entry.update(valuations_json(d.valuations, cfg.field.q()));
    entry["P"] = matrix_json(d.P);
    entry["D"] = matrix_json(d.D);
    entry["Q"] = matrix_json(d.Q);
    entry["reconstructs"] = equal_at_precision(mat_mul(mat_mul(d.P, d.D), d.Q), t);
    entry["P_isometry"] = is_isometry(d.P);
    entry["Q_isometry"] = is_isometry(d.Q);
    maps.push_back(std::move(entry));
  }
  return Json{{"command", "svd"}, {"field", field_json(cfg.field)}, {"maps", maps}};
}

inline Json command_phi(const SystemConfig& cfg, const Flags& flags) {
  const double s = require_s(flags, "phi");
  Json maps = Json::array();
  for (std::size_t i = 0; i < cfg.maps.size(); ++i) {
    const auto v = singular_valuations(cfg.maps[i]);
    const PhiValue p = phi_log(v, s, cfg.field.q());
    Json entry{{"map", i + 1}};
    entry.update(valuations_json(v, cfg.field.q()));
    entry["log_q_phi"] = p.log_q_value;
    entry["phi"] = p.value();
    maps.push_back(std::move(entry));
  }
  return Json{{"command", "phi"}, {"s", s}, {"maps", maps}};
}

inline Json command_dim(const SystemConfig& cfg, const Flags& flags) {
  const WordSpace ws = cfg.word_space();
  const PressureBracket b = critical_exponent(ws, k_max_for(cfg, flags), cfg.budgets.tolerance, flags.workers);
  Json out{{"command", "dim"}, {"a_exp", ws.a_exp()}, {"b_exp", ws.b_exp()}};
  out["bracket"] = bracket_json(b);
  return out;
}

inline BoxCountOptions box_options(const SystemConfig& cfg, const Flags& flags) {
  return {cfg.budgets.node_cap, flags.workers};
}

inline Report command_boxdim(const SystemConfig& cfg, const Flags& flags) {
  const int t_min = flags.t_min.value_or(1);
  const int t_max = flags.t_max.value_or(8);
  const Aifs aifs = cfg.aifs();
  const BoxDimensionEstimate est = box_dimension_estimate(aifs, t_min, t_max, box_options(cfg, flags));
  if (flags.format == "csv") {
    std::string body = "t,N_t,words_expanded\n";
    for (const auto& r : est.table.rows) {
      body += std::to_string(r.t) + "," + std::to_string(r.count) + "," + std::to_string(r.words_expanded) + "\n";
    }
    return {body, kOk};
  }
  Json out{{"command", "boxdim"}, {"radius_exponent", aifs.radius_exponent()}};
  out["rows"] = box_rows_json(est.table.rows);
  out["slope"] = est.slope;
  return {out.dump(2) + "\n", kOk};
}

inline Json command_experiment(const SystemConfig& cfg, const Flags& flags) {
  ExperimentOptions opts;
  opts.t_min = flags.t_min.value_or(opts.t_min);
  opts.t_max = flags.t_max.value_or(opts.t_max);
  opts.k_max = k_max_for(cfg, flags);
  opts.tol = cfg.budgets.tolerance;
  opts.box = box_options(cfg, flags);
  const std::uint64_t seed = seed_for(cfg, flags);
  const ExperimentReport rep = random_translation_experiment(cfg.word_space(), flags.trials.value_or(20), seed, opts);
  Json trials = Json::array();
  for (const auto& t : rep.trials) {
    trials.push_back(Json{{"trial", t.trial}, {"estimate", t.estimate}, {"deviation", t.deviation},
                          {"within_band", t.within_band}});
  }
  return Json{{"command", "experiment"},
              {"seed", seed},
              {"t_min", opts.t_min},
              {"t_max", opts.t_max},
              {"bracket", bracket_json(rep.bracket)},
              {"target", rep.target},
              {"band", opts.band},
              {"within_band", rep.within_band},
              {"above_upper_bound", rep.above_upper_bound},
              {"trials", trials}};
}

inline Json command_mcintegral(const SystemConfig& cfg, const Flags& flags) {
  const double s = require_s(flags, "mcintegral");
  const std::uint64_t samples = flags.samples.value_or(100'000);
  const std::uint64_t seed = seed_for(cfg, flags);
  Json maps = Json::array();
  for (std::size_t i = 0; i < cfg.maps.size(); ++i) {
    auto rng = trial_rng(seed, i);
    const MonteCarloEstimate est = potential_integral_mc(cfg.maps[i], s, samples, rng);
    const PhiValue p = phi(cfg.maps[i], s);
    maps.push_back(Json{{"map", i + 1},
                        {"mean", est.mean},
                        {"standard_error", est.standard_error},
                        {"samples", est.samples},
                        {"phi", p.value()},
                        {"mean_times_phi", est.mean * p.value()}});
  }
  return Json{{"command", "mcintegral"}, {"s", s}, {"seed", seed}, {"maps", maps}};
}

struct CheckList {
  Json items = Json::array();
  bool all = true;

  void add(const std::string& name, bool passed, Json detail = Json::object()) {
    all = all && passed;
    items.push_back(Json{{"name", name}, {"passed", passed}, {"detail", std::move(detail)}});
  }
};

inline Json command_verify(const SystemConfig& cfg, const Flags& flags) {
  const std::uint64_t seed = seed_for(cfg, flags);
  const FieldSpec& spec = cfg.field;
  const std::uint32_t q = spec.q();
  CheckList checks;

  {
    constexpr int kPairs = 500;
    auto rng = trial_rng(seed, 0);
    std::uniform_int_distribution<int> shift(-4, 4);
    int failures = 0;
    for (int i = 0; i < kPairs; ++i) {
      const FieldElement x = haar_sample(spec, rng, 0) * FieldElement::monomial(spec, shift(rng));
      const FieldElement y = haar_sample(spec, rng, 0) * FieldElement::monomial(spec, shift(rng));
      const bool zero_ok = x.is_zero() == (x.valuation() == kInfiniteValuation);
      const bool mul_ok = x.is_zero() || y.is_zero() || (x * y).valuation() == x.valuation() + y.valuation();
      const int vs = (x + y).valuation();
      const int lo = std::min(x.valuation(), y.valuation());
      const bool add_ok = vs >= lo && (x.valuation() == y.valuation() || vs == lo);
      failures += (zero_ok && mul_ok && add_ok) ? 0 : 1;
    }
    checks.add("field_axioms", failures == 0, Json{{"pairs", kPairs}, {"failures", failures}});
  }

  {
    auto rng = trial_rng(seed, 1);
    bool recon = true, iso = true, minors = true, unique = true;
    for (const Matrix& t : cfg.maps) {
      const SingularDecomposition d = svd(t);
      recon = recon && equal_at_precision(mat_mul(mat_mul(d.P, d.D), d.Q), t);
      iso = iso && is_isometry(d.P) && is_isometry(d.Q);
      minors = minors && d.valuations == singular_valuations_by_minors(t);
      unique = unique && svd_uniqueness_probe(t, rng);
    }
    checks.add("svd_reconstruction", recon);
    checks.add("svd_isometry", iso);
    checks.add("svd_minors_agree", minors);
    checks.add("svd_unique_valuations", unique);
  }

  {
    std::vector<double> grid;
    for (int j = 1; j <= static_cast<int>(8 * cfg.n); ++j) grid.push_back(0.25 * j);
    int pairs = 0, failures = 0;
    for (const Matrix& t : cfg.maps) {
      for (const Matrix& u : cfg.maps) {
        ++pairs;
        failures += check_submultiplicative(t, u, grid) ? 0 : 1;
      }
    }
    checks.add("phi_submultiplicative", failures == 0, Json{{"pairs", pairs}, {"failures", failures}});
  }

  const WordSpace ws = cfg.word_space();
  const PressureBracket bracket = critical_exponent(ws, k_max_for(cfg, flags), cfg.budgets.tolerance, flags.workers);
  {
    bool roots_ok = true;
    for (const double r : bracket.roots) roots_ok = roots_ok && bracket.s_upper <= r;
    bool decreasing = true;
    for (std::size_t j = 1; j < bracket.profile.size(); ++j) {
      decreasing = decreasing && bracket.profile[j].f < bracket.profile[j - 1].f;
    }
    checks.add("pressure_bracket_ordered", bracket.s_lower <= bracket.s_upper && roots_ok);
    checks.add("pressure_decreasing", decreasing);
  }

  const int t_max = flags.t_max.value_or(6);
  const int t_min = flags.t_min.value_or(1);
  const BoxDimensionEstimate est = box_dimension_estimate(cfg.aifs(), t_min, t_max, box_options(cfg, flags));
  {
    bool monotone = true;
    for (std::size_t j = 1; j < est.table.rows.size(); ++j) {
      monotone = monotone && est.table.rows[j].count >= est.table.rows[j - 1].count;
    }
    checks.add("box_counts_monotone", monotone);
  }

  return Json{{"command", "verify"},
              {"seed", seed},
              {"field", field_json(spec)},
              {"q", q},
              {"checks", checks.items},
              {"bracket", bracket_json(bracket)},
              {"box_counts", box_rows_json(est.table.rows)},
              {"box_slope", est.slope},
              {"passed", checks.all}};
}

}  // namespace detail

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"svd", "phi", "dim", "boxdim", "experiment", "mcintegral", "verify"};
  return names;
}

inline ConfigCheck config_check_for(const std::string& cmd) {
  return cmd == "svd" || cmd == "phi" ? ConfigCheck::maps_only : ConfigCheck::attractor;
}

inline Report run_command(const std::string& cmd, const SystemConfig& config, const Flags& flags) {
  if (flags.format != "json" && flags.format != "csv") throw std::invalid_argument("--format must be json or csv");
  if (flags.format == "csv" && cmd != "boxdim") throw std::invalid_argument("--format csv applies to boxdim only");
  if (flags.workers < 1) throw std::invalid_argument("--workers must be >= 1");
  auto json_report = [](const Json& j, int code = kOk) { return Report{j.dump(2) + "\n", code}; };
  if (cmd == "svd") return json_report(detail::command_svd(config));
  if (cmd == "phi") return json_report(detail::command_phi(config, flags));
  if (cmd == "dim") return json_report(detail::command_dim(config, flags));
  if (cmd == "boxdim") return detail::command_boxdim(config, flags);
  if (cmd == "experiment") return json_report(detail::command_experiment(config, flags));
  if (cmd == "mcintegral") return json_report(detail::command_mcintegral(config, flags));
  if (cmd == "verify") {
    const Json j = detail::command_verify(config, flags);
    return json_report(j, j["passed"].get<bool>() ? kOk : kInternal);
  }
  throw std::invalid_argument("unknown command '" + cmd + "'");
}

}  // namespace nadim::cli
