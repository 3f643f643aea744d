#pragma once

// Experiment configuration: an INI-like text format with [sections],
// `key = value` lines and bracketed (possibly nested, possibly multi-line)
// lists. Values are numbers, true/false, bare words or "quoted strings".

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/scalar_field.hpp"

namespace shadowflow::config {

struct Value {
  std::variant<double, bool, std::string, std::vector<Value>> v;
  int line = 0;
};

struct Entry {
  std::string key;
  Value value;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

using Document = std::vector<Section>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  Value parse_all() {
    Value v = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected text after value: '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    Value out;
    out.line = line_;
    if (s_[pos_] == '[') {
      ++pos_;
      std::vector<Value> items;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        out.v = std::move(items);
        return out;
      }
      while (true) {
        items.push_back(parse());
        skip_ws();
        if (pos_ >= s_.size()) fail("unterminated list");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          break;
        }
        fail(std::string("expected ',' or ']' in list, got '") + s_[pos_] + "'");
      }
      out.v = std::move(items);
      return out;
    }
    if (s_[pos_] == '"') {
      const auto end = s_.find('"', pos_ + 1);
      if (end == std::string::npos) fail("unterminated string");
      out.v = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return out;
    }
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '[' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("missing value");
    if (tok == "true" || tok == "false") {
      out.v = (tok == "true");
      return out;
    }
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() + tok.size()) {
      if (!std::isfinite(d)) fail("non-finite number '" + tok + "'");
      out.v = d;
      return out;
    }
    if (std::isdigit(static_cast<unsigned char>(tok[0])) || tok[0] == '-' || tok[0] == '+' || tok[0] == '.')
      fail("malformed number '" + tok + "'");
    out.v = tok;
    return out;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

inline int bracket_depth(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

}  // namespace detail

/// Tokenizes config text. Structural problems raise ParseError with the
/// 1-based line; meaning is checked later.
inline Document parse_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "section header must end with ']'");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (!detail::valid_name(name)) throw ParseError(lineno, "invalid section name '" + name + "'");
      for (const auto& s : doc)
        if (s.name == name) throw ParseError(lineno, "duplicate section [" + name + "]");
      doc.push_back({name, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value' or '[section]'");
    const std::string key = detail::trim(line.substr(0, eq));
    if (!detail::valid_name(key)) throw ParseError(lineno, "invalid key '" + key + "'");
    if (doc.empty()) throw ParseError(lineno, "key '" + key + "' appears before any [section]");
    std::string rhs = detail::trim(line.substr(eq + 1));
    const int start_line = lineno;
    // lists may continue over following lines until brackets balance
    while (detail::bracket_depth(rhs) > 0) {
      if (!std::getline(in, raw)) throw ParseError(start_line, "unterminated list");
      ++lineno;
      rhs += " " + detail::trim(detail::strip_comment(raw));
    }
    if (detail::bracket_depth(rhs) < 0) throw ParseError(lineno, "unbalanced ']'");
    Section& sec = doc.back();
    for (const auto& e : sec.entries)
      if (e.key == key) throw ParseError(start_line, "duplicate key '" + key + "' in [" + sec.name + "]");
    sec.entries.push_back({key, detail::ValueParser(rhs, start_line).parse_all()});
  }
  return doc;
}

// ---------------------------------------------------------------------------
// typed configuration

struct SystemConfig {
  std::string h = "harmonic";  // harmonic | shifted-harmonic | exponential-radial | constant | pendulum-offset | polynomial
  double c = 1.0;              // shifted-harmonic, exponential-radial
  double b = 1.0;              // constant
  double offset = 1.0;         // pendulum-offset
  std::vector<Monomial> terms;  // polynomial: rows [coefficient, e_1, ..., e_2n]
  std::string derivatives = "default";  // default | analytic | finite-difference
  double fd_scale = 1e-4;
  int n = 1;  // degrees of freedom (fixed by the terms for polynomial)
  std::vector<std::vector<double>> gamma;  // empty = identity
  double h_min = kDefaultHMin;

  ScalarField field() const;
  MetricField metric() const;
};

struct DynamicsConfig {
  double mu = 0.03125;
  std::vector<double> xi{1.0, 0.0};
  std::vector<double> v;  // empty: build v from (E, l); simulate then needs h = harmonic, n = 1
  double E = 1.0;
  double l = 0.25;
  bool inward = true;
  double horizon = 10.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1e300;
  double sample_interval = 0.0;  // 0: min(0.05, gyro period / 16)
  bool reference = true;         // also integrate the Hamiltonian flow from X(0)
};

struct OracleConfig {
  double p = 0.5;  // mu = p l^2 / E
  double E = 1.0;
  double l = 0.25;
  std::vector<double> start{1.0, 0.0};
  double periods = 3.0;   // horizon in radial periods for bound runs
  double horizon = 3.0;   // horizon for unbound runs
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
};

struct SweepConfig {
  std::vector<double> mu{0.1, 0.05, 0.02, 0.01, 0.005, 0.002};
  double E = 1.0;
  double l = 0.25;
  std::vector<double> start{1.0, 0.0};
  double horizon = 3.141592653589793;
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  double samples_per_gyration = 16.0;
};

struct SpectrumConfig {
  double hbar = 0.1;
  double L = 3.0;
  int N = 192;
  int k = 6;
  std::string gauge = "symmetric";  // symmetric | landau
  bool i1_potential = false;
  std::optional<double> shift;
  double wall_tolerance = 1e-6;
  std::string slow_h = "none";  // none | harmonic | shifted-harmonic: h whose slow spectrum is compared
  double slow_c = 1.0;
  int compare_levels = 0;       // > 0: take the lowest this many as the band
  int landau_levels = 2;        // constant field: levels whose multiplicity is counted
};

struct Fig1Config {
  bool enabled = true;
  std::vector<double> p{10.0, 1.0, 0.95, 0.5, 0.1, 0.01};
  double E = 1.0;
  double l = 0.25;
  std::vector<double> start{1.0, 0.0};
  double horizon = 3.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double samples_per_period = 32.0;
};

struct ExperimentConfig {
  SystemConfig system;
  DynamicsConfig dynamics;
  OracleConfig oracle;
  SweepConfig sweep;
  SpectrumConfig spectrum;
  Fig1Config fig1;
  std::string out = "out";
};

inline ScalarField SystemConfig::field() const {
  const DerivativeMode fd = FiniteDifferenceDerivatives{fd_scale};
  auto with = [&](ScalarField f) {
    if (derivatives == "analytic") return f.with_mode(AnalyticDerivatives{});
    if (derivatives == "finite-difference") return f.with_mode(fd);
    return f.analytic() ? f : f.with_mode(fd);
  };
  if (h == "harmonic") return with(ScalarField::harmonic());
  if (h == "shifted-harmonic") return with(ScalarField::shifted_harmonic(c));
  if (h == "exponential-radial") return with(ScalarField::exponential_radial(c));
  if (h == "constant") return with(ScalarField::constant(b));
  if (h == "pendulum-offset") return with(ScalarField::pendulum_offset(offset));
  if (h == "polynomial") return with(ScalarField::polynomial(terms));
  throw ValidationError("system.h", "unknown field kind '" + h + "'");
}

inline MetricField SystemConfig::metric() const {
  if (gamma.empty()) return MetricField(field(), h_min);
  Mat g(gamma.size(), gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i)
    for (std::size_t j = 0; j < gamma.size(); ++j) g(i, j) = gamma[i][j];
  return MetricField(field(), g, h_min);
}

namespace detail {

class Reader {
 public:
  Reader(const Section& s) : sec_(s), used_(s.entries.size(), false) {}

  const Value* find(const std::string& key) {
    for (std::size_t i = 0; i < sec_.entries.size(); ++i)
      if (sec_.entries[i].key == key) {
        used_[i] = true;
        return &sec_.entries[i].value;
      }
    return nullptr;
  }
  std::string field(const std::string& key) const { return sec_.name + "." + key; }

  void number(const std::string& key, double& out) {
    if (const Value* v = find(key)) out = as_number(*v, key);
  }
  void integer(const std::string& key, int& out) {
    if (const Value* v = find(key)) {
      const double d = as_number(*v, key);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ValidationError(field(key), "expected an integer");
      out = static_cast<int>(d);
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const Value* v = find(key)) {
      if (!std::holds_alternative<bool>(v->v)) throw ValidationError(field(key), "expected true or false");
      out = std::get<bool>(v->v);
    }
  }
  void word(const std::string& key, std::string& out, const std::vector<std::string>& allowed) {
    if (const Value* v = find(key)) {
      if (!std::holds_alternative<std::string>(v->v)) throw ValidationError(field(key), "expected a word");
      out = std::get<std::string>(v->v);
      if (allowed.empty()) return;
      for (const auto& a : allowed)
        if (a == out) return;
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ValidationError(field(key), "'" + out + "' is not one of: " + list);
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) {
    if (const Value* v = find(key)) out = as_numbers(*v, key);
  }
  void matrix(const std::string& key, std::vector<std::vector<double>>& out) {
    if (const Value* v = find(key)) {
      if (!std::holds_alternative<std::vector<Value>>(v->v)) throw ValidationError(field(key), "expected a list of lists");
      out.clear();
      for (const auto& row : std::get<std::vector<Value>>(v->v)) out.push_back(as_numbers(row, key));
    }
  }

  void reject_unknown() const {
    for (std::size_t i = 0; i < used_.size(); ++i)
      if (!used_[i]) throw ValidationError(field(sec_.entries[i].key), "unknown key '" + sec_.entries[i].key + "'");
  }

 private:
  double as_number(const Value& v, const std::string& key) const {
    if (!std::holds_alternative<double>(v.v)) throw ValidationError(field(key), "expected a number");
    return std::get<double>(v.v);
  }
  std::vector<double> as_numbers(const Value& v, const std::string& key) const {
    if (!std::holds_alternative<std::vector<Value>>(v.v)) throw ValidationError(field(key), "expected a list of numbers");
    std::vector<double> out;
    for (const auto& item : std::get<std::vector<Value>>(v.v)) out.push_back(as_number(item, key));
    return out;
  }

  const Section& sec_;
  std::vector<bool> used_;
};

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

inline void require_point(const std::vector<double>& x, const std::string& field) {
  require(!x.empty() && x.size() % 2 == 0, field, "needs an even number (2n) of coordinates");
}

inline void require_oscillator(double E, double l, const std::string& sec) {
  require(E > 0.0, sec + ".E", "must be positive");
  require(l > 0.0, sec + ".l", "must be positive");
}

inline void read_system(Reader& r, SystemConfig& c) {
  r.word("h", c.h, {"harmonic", "shifted-harmonic", "exponential-radial", "constant", "pendulum-offset", "polynomial"});
  r.number("c", c.c);
  r.number("b", c.b);
  r.number("offset", c.offset);
  std::vector<std::vector<double>> rows;
  r.matrix("terms", rows);
  for (const auto& row : rows) {
    require(row.size() >= 3 && row.size() % 2 == 1, "system.terms",
            "each term is [coefficient, e_1, ..., e_2n] with an even number of exponents");
    Monomial m;
    m.coefficient = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) {
      require(row[i] >= 0.0 && row[i] == std::floor(row[i]), "system.terms", "exponents must be nonnegative integers");
      m.exponents.push_back(static_cast<int>(row[i]));
    }
    c.terms.push_back(m);
  }
  r.word("derivatives", c.derivatives, {"default", "analytic", "finite-difference"});
  r.number("fd_scale", c.fd_scale);
  r.integer("n", c.n);
  r.matrix("gamma", c.gamma);
  r.number("h_min", c.h_min);
  r.reject_unknown();

  require(c.n >= 1, "system.n", "must be at least 1");
  if (c.h == "polynomial") {
    require(!c.terms.empty(), "system.terms", "polynomial field needs at least one term");
    const std::size_t e = c.terms.front().exponents.size();
    for (const auto& t : c.terms) require(t.exponents.size() == e, "system.terms", "terms differ in length");
    c.n = static_cast<int>(e / 2);
  } else {
    require(c.terms.empty(), "system.terms", "only a polynomial field takes terms");
  }
  require(c.fd_scale > 0.0, "system.fd_scale", "must be positive");
  require(c.h_min >= 0.0, "system.h_min", "must be nonnegative");
  if (!c.gamma.empty()) {
    require(c.gamma.size() == static_cast<std::size_t>(2 * c.n), "system.gamma", "must be 2n x 2n");
    for (const auto& row : c.gamma) require(row.size() == c.gamma.size(), "system.gamma", "must be square");
  }
  try {
    (void)c.metric();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(c.gamma.empty() ? "system.h" : "system.gamma", e.what());
  }
}

inline void read_dynamics(Reader& r, DynamicsConfig& c, int n) {
  r.number("mu", c.mu);
  r.numbers("xi", c.xi);
  r.numbers("v", c.v);
  r.number("E", c.E);
  r.number("l", c.l);
  r.boolean("inward", c.inward);
  r.number("horizon", c.horizon);
  r.number("rel_tol", c.rel_tol);
  r.number("abs_tol", c.abs_tol);
  r.number("max_step", c.max_step);
  r.number("sample_interval", c.sample_interval);
  r.boolean("reference", c.reference);
  r.reject_unknown();
  require(c.mu > 0.0, "dynamics.mu", "must be positive");
  require_point(c.xi, "dynamics.xi");
  require(c.xi.size() == static_cast<std::size_t>(2 * n), "dynamics.xi", "must have 2n coordinates for the system");
  require(c.v.empty() || c.v.size() == c.xi.size(), "dynamics.v", "must match the dimension of xi");
  require(c.E > 0.0, "dynamics.E", "must be positive");
  require(c.horizon > 0.0, "dynamics.horizon", "must be positive");
  require(c.rel_tol > 0.0 && c.rel_tol < 1.0, "dynamics.rel_tol", "must lie in (0, 1)");
  require(c.abs_tol > 0.0 && c.abs_tol < 1.0, "dynamics.abs_tol", "must lie in (0, 1)");
  require(c.max_step > 0.0, "dynamics.max_step", "must be positive");
  require(c.sample_interval >= 0.0 && c.sample_interval <= c.horizon, "dynamics.sample_interval",
          "must lie in [0, horizon] (0 = automatic)");
}

inline void read_oracle(Reader& r, OracleConfig& c) {
  r.number("p", c.p);
  r.number("E", c.E);
  r.number("l", c.l);
  r.numbers("start", c.start);
  r.number("periods", c.periods);
  r.number("horizon", c.horizon);
  r.number("rel_tol", c.rel_tol);
  r.number("abs_tol", c.abs_tol);
  r.reject_unknown();
  require(c.p > 0.0, "oracle.p", "must be positive");
  require_oscillator(c.E, c.l, "oracle");
  require(c.start.size() == 2, "oracle.start", "must be a point of the phase plane");
  require(c.periods > 0.0, "oracle.periods", "must be positive");
  require(c.horizon > 0.0, "oracle.horizon", "must be positive");
  require(c.rel_tol > 0.0 && c.rel_tol < 1.0, "oracle.rel_tol", "must lie in (0, 1)");
  require(c.abs_tol > 0.0 && c.abs_tol < 1.0, "oracle.abs_tol", "must lie in (0, 1)");
}

inline void read_sweep(Reader& r, SweepConfig& c) {
  r.numbers("mu", c.mu);
  r.number("E", c.E);
  r.number("l", c.l);
  r.numbers("start", c.start);
  r.number("horizon", c.horizon);
  r.number("rel_tol", c.rel_tol);
  r.number("abs_tol", c.abs_tol);
  r.number("samples_per_gyration", c.samples_per_gyration);
  r.reject_unknown();
  require(!c.mu.empty(), "sweep.mu", "needs at least one value");
  for (std::size_t i = 0; i < c.mu.size(); ++i) {
    require(c.mu[i] > 0.0, "sweep.mu", "values must be positive");
    require(i == 0 || c.mu[i] < c.mu[i - 1], "sweep.mu", "values must be strictly decreasing");
  }
  require_oscillator(c.E, c.l, "sweep");
  require(c.start.size() == 2, "sweep.start", "must be a point of the phase plane");
  require(c.horizon > 0.0, "sweep.horizon", "must be positive");
  require(c.rel_tol > 0.0 && c.rel_tol < 1.0, "sweep.rel_tol", "must lie in (0, 1)");
  require(c.abs_tol > 0.0 && c.abs_tol < 1.0, "sweep.abs_tol", "must lie in (0, 1)");
  require(c.samples_per_gyration >= 1.0, "sweep.samples_per_gyration", "must be at least 1");
}

inline void read_spectrum(Reader& r, SpectrumConfig& c) {
  r.number("hbar", c.hbar);
  r.number("L", c.L);
  r.integer("N", c.N);
  r.integer("k", c.k);
  r.word("gauge", c.gauge, {"symmetric", "landau"});
  r.boolean("i1_potential", c.i1_potential);
  if (const Value* v = r.find("shift")) {
    if (!std::holds_alternative<double>(v->v)) throw ValidationError("spectrum.shift", "expected a number");
    c.shift = std::get<double>(v->v);
  }
  r.number("wall_tolerance", c.wall_tolerance);
  r.word("slow_h", c.slow_h, {"none", "harmonic", "shifted-harmonic"});
  r.number("slow_c", c.slow_c);
  r.integer("compare_levels", c.compare_levels);
  r.integer("landau_levels", c.landau_levels);
  r.reject_unknown();
  require(c.hbar > 0.0, "spectrum.hbar", "must be positive");
  require(c.L > 0.0, "spectrum.L", "must be positive");
  require(c.N >= 64, "spectrum.N", "must be at least 64");
  require(c.k >= 1, "spectrum.k", "must be at least 1");
  require(c.k <= (c.N - 2) * (c.N - 2), "spectrum.k", "exceeds the number of unknowns");
  require(c.compare_levels == 0 || c.compare_levels >= 3, "spectrum.compare_levels", "must be 0 or at least 3");
  require(c.compare_levels <= c.k, "spectrum.compare_levels", "cannot exceed k");
  require(c.landau_levels >= 0, "spectrum.landau_levels", "must be nonnegative");
}

inline void read_fig1(Reader& r, Fig1Config& c) {
  r.boolean("enabled", c.enabled);
  r.numbers("p", c.p);
  r.number("E", c.E);
  r.number("l", c.l);
  r.numbers("start", c.start);
  r.number("horizon", c.horizon);
  r.number("rel_tol", c.rel_tol);
  r.number("abs_tol", c.abs_tol);
  r.number("samples_per_period", c.samples_per_period);
  r.reject_unknown();
  require(!c.p.empty(), "fig1.p", "needs at least one value");
  for (double p : c.p) require(p > 0.0, "fig1.p", "values must be positive");
  require_oscillator(c.E, c.l, "fig1");
  require(c.start.size() == 2, "fig1.start", "must be a point of the phase plane");
  require(c.horizon > 0.0, "fig1.horizon", "must be positive");
  require(c.rel_tol > 0.0 && c.rel_tol < 1.0, "fig1.rel_tol", "must lie in (0, 1)");
  require(c.abs_tol > 0.0 && c.abs_tol < 1.0, "fig1.abs_tol", "must lie in (0, 1)");
  require(c.samples_per_period >= 1.0, "fig1.samples_per_period", "must be at least 1");
}

}  // namespace detail

/// Parses and validates; every section is optional and defaults fill the rest.
inline ExperimentConfig parse_config(const std::string& text) {
  const Document doc = parse_document(text);
  ExperimentConfig cfg;
  const Section empty{};
  auto section = [&](const std::string& name) -> const Section& {
    for (const auto& s : doc)
      if (s.name == name) return s;
    return empty;
  };
  for (const auto& s : doc) {
    static const std::vector<std::string> known{"system", "dynamics", "oracle", "sweep", "spectrum", "fig1", "output"};
    bool ok = false;
    for (const auto& k : known) ok = ok || k == s.name;
    if (!ok) throw ValidationError(s.name, "unknown section [" + s.name + "]");
  }
  {
    detail::Reader r(section("system"));
    detail::read_system(r, cfg.system);
  }
  {
    detail::Reader r(section("dynamics"));
    detail::read_dynamics(r, cfg.dynamics, cfg.system.n);
  }
  {
    detail::Reader r(section("oracle"));
    detail::read_oracle(r, cfg.oracle);
  }
  {
    detail::Reader r(section("sweep"));
    detail::read_sweep(r, cfg.sweep);
  }
  {
    detail::Reader r(section("spectrum"));
    detail::read_spectrum(r, cfg.spectrum);
  }
  {
    detail::Reader r(section("fig1"));
    detail::read_fig1(r, cfg.fig1);
  }
  {
    detail::Reader r(section("output"));
    r.word("dir", cfg.out, {});
    r.reject_unknown();
    detail::require(!cfg.out.empty(), "output.dir", "must not be empty");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// canonical text

/// Shortest decimal that reads back as the same double.
inline std::string format_number(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s + "]";
}

inline std::string quoted(const std::string& s) {
  // bare words round-trip unless they look like numbers or booleans
  if (valid_name(s) && !std::isdigit(static_cast<unsigned char>(s[0])) && s[0] != '-' && s != "true" && s != "false")
    return s;
  return "\"" + s + "\"";
}

}  // namespace detail

/// Every resolved value in a fixed order; parse_config(to_text(c)) == c.
/// The [output] section is left out when `with_output` is false.
inline std::string to_text(const ExperimentConfig& c, bool with_output = true) {
  using detail::list;
  std::ostringstream o;
  auto num = [](double x) { return format_number(x); };
  auto b = [](bool x) { return x ? "true" : "false"; };
  const auto& s = c.system;
  o << "[system]\nh = " << s.h << "\nc = " << num(s.c) << "\nb = " << num(s.b) << "\noffset = " << num(s.offset)
    << "\n";
  if (!s.terms.empty()) {
    o << "terms = [";
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
      std::vector<double> row{s.terms[i].coefficient};
      for (int e : s.terms[i].exponents) row.push_back(e);
      o << (i ? ", " : "") << list(row);
    }
    o << "]\n";
  }
  o << "derivatives = " << s.derivatives << "\nfd_scale = " << num(s.fd_scale) << "\nn = " << s.n << "\n";
  if (!s.gamma.empty()) {
    o << "gamma = [";
    for (std::size_t i = 0; i < s.gamma.size(); ++i) o << (i ? ", " : "") << list(s.gamma[i]);
    o << "]\n";
  }
  o << "h_min = " << num(s.h_min) << "\n";

  const auto& d = c.dynamics;
  o << "\n[dynamics]\nmu = " << num(d.mu) << "\nxi = " << list(d.xi) << "\n";
  if (!d.v.empty()) o << "v = " << list(d.v) << "\n";
  o << "E = " << num(d.E) << "\nl = " << num(d.l) << "\ninward = " << b(d.inward) << "\nhorizon = " << num(d.horizon)
    << "\nrel_tol = " << num(d.rel_tol) << "\nabs_tol = " << num(d.abs_tol) << "\nmax_step = " << num(d.max_step)
    << "\nsample_interval = " << num(d.sample_interval) << "\nreference = " << b(d.reference) << "\n";

  const auto& q = c.oracle;
  o << "\n[oracle]\np = " << num(q.p) << "\nE = " << num(q.E) << "\nl = " << num(q.l) << "\nstart = " << list(q.start)
    << "\nperiods = " << num(q.periods) << "\nhorizon = " << num(q.horizon) << "\nrel_tol = " << num(q.rel_tol)
    << "\nabs_tol = " << num(q.abs_tol) << "\n";

  const auto& w = c.sweep;
  o << "\n[sweep]\nmu = " << list(w.mu) << "\nE = " << num(w.E) << "\nl = " << num(w.l) << "\nstart = " << list(w.start)
    << "\nhorizon = " << num(w.horizon) << "\nrel_tol = " << num(w.rel_tol) << "\nabs_tol = " << num(w.abs_tol)
    << "\nsamples_per_gyration = " << num(w.samples_per_gyration) << "\n";

  const auto& p = c.spectrum;
  o << "\n[spectrum]\nhbar = " << num(p.hbar) << "\nL = " << num(p.L) << "\nN = " << p.N << "\nk = " << p.k
    << "\ngauge = " << p.gauge << "\ni1_potential = " << b(p.i1_potential) << "\n";
  if (p.shift) o << "shift = " << num(*p.shift) << "\n";
  o << "wall_tolerance = " << num(p.wall_tolerance) << "\nslow_h = " << p.slow_h << "\nslow_c = " << num(p.slow_c)
    << "\ncompare_levels = " << p.compare_levels << "\nlandau_levels = " << p.landau_levels << "\n";

  const auto& f = c.fig1;
  o << "\n[fig1]\nenabled = " << b(f.enabled) << "\np = " << list(f.p) << "\nE = " << num(f.E) << "\nl = " << num(f.l)
    << "\nstart = " << list(f.start) << "\nhorizon = " << num(f.horizon) << "\nrel_tol = " << num(f.rel_tol)
    << "\nabs_tol = " << num(f.abs_tol) << "\nsamples_per_period = " << num(f.samples_per_period) << "\n";

  if (with_output) o << "\n[output]\ndir = " << detail::quoted(c.out) << "\n";
  return o.str();
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits. Where results
/// are written does not change them, so [output] is not hashed.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace shadowflow::config
