#pragma once

// JSON run configuration: parsing, schema checks with line-precise errors,
// and --set key=value overrides.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kac/chaos.hpp"
#include "kac/errors.hpp"
#include "kac/laws.hpp"
#include "kac/observables.hpp"
#include "kac/picard.hpp"
#include "kac/simulator.hpp"

namespace kac {

using json = nlohmann::ordered_json;

struct SimSection {
  bool present = false;
  std::size_t N = 0;
  double t_end = 0.0;
  std::size_t replicas = 1;
  std::vector<double> sample_times;
  SlotMode slots = SlotMode::First;
  bool keep_final_states = false;
};

struct PicardSection {
  std::optional<bool> enabled;  // unset: run when the mixture is the pure Kac toy
  double L = 8.0;
  std::size_t n_v = 513;
  std::size_t n_theta = 64;
  std::size_t n_t = 32;
  std::size_t n_iter = 6;
  double t_guard = 0.0;  // 0: 0.25 / alpha
};

struct MeanFieldSection {
  bool present = false;
  std::size_t n = 1000;
  double t_end = 0.0;
  std::size_t replicas = 1;
  std::vector<double> sample_times;
  SlotMode slots = SlotMode::First;
  PicardSection picard;
};

struct ChaosSection {
  bool present = false;
  std::vector<std::size_t> N_grid;
  std::vector<std::size_t> s_list{1, 2};
  std::vector<double> t_list{0.0, 1.0};
  ChaosBudget budget;
  SlotMode slots = SlotMode::Blocks;
  double pass_threshold = 1.0;
};

struct HierarchySection {
  double epsilon = 0.5;
  double T = -1.0;  // < 0: T_max / 2
  std::vector<std::uint64_t> N_sweep{10, 100, 1000, 10000, 100000, 1000000};
  std::vector<std::uint64_t> s_sweep{1, 2, 3, 5};
  std::vector<std::uint64_t> k_sweep{0, 1, 2, 3, 4};
};

struct LawsCheckSection {
  std::size_t samples = 100000;
  std::size_t h1_samples = 10000;
  std::vector<LawSpec> laws;  // empty: every built-in for the mixture dimension
};

struct RunConfig {
  json resolved;  // the document after overrides, echoed into manifests
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool has_mixture = false;
  MixtureSpec mixture;
  InitialLaw initial;
  SimSection sim;
  MeanFieldSection meanfield;
  std::vector<ObservableSpec> observables;
  ChaosSection chaos;
  HierarchySection hierarchy;
  LawsCheckSection laws_check;
};

namespace config_detail {

using Path = std::vector<std::string>;

inline std::string pointer(const Path& p) {
  std::string s;
  for (const auto& t : p) s += "/" + t;
  return s.empty() ? "/" : s;
}

/// Finds the line of a key path by walking the raw text key by key.
/// Good enough for error messages; returns 0 when a key is not found
/// (e.g. it came from --set).
inline int locate(const std::string& text, const Path& path) {
  std::size_t pos = 0;
  for (const auto& tok : path) {
    if (!tok.empty() && std::isdigit(static_cast<unsigned char>(tok[0]))) continue;  // array index
    const std::string needle = "\"" + tok + "\"";
    std::size_t at = pos;
    for (;;) {
      at = text.find(needle, at);
      if (at == std::string::npos) return 0;
      std::size_t after = at + needle.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += needle.size();
    }
    pos = at;
  }
  if (path.empty()) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const Path& path, const std::string& msg) const {
    const int line = locate(text_, path);
    std::string where = pointer(path);
    std::string full = where + ": " + msg;
    if (line > 0) full = "line " + std::to_string(line) + ": " + full;
    throw ConfigError(full, where, line);
  }

  void expect_object(const json& j, const Path& path) const {
    if (!j.is_object()) fail(path, "expected an object");
  }

  void allow_keys(const json& j, const Path& path, std::initializer_list<const char*> keys) const {
    expect_object(j, path);
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
      (void)v;
      if (!ok.count(k)) {
        Path p = path;
        p.push_back(k);
        fail(p, "unknown key '" + k + "'");
      }
    }
  }

  static Path child(const Path& p, const std::string& k) {
    Path q = p;
    q.push_back(k);
    return q;
  }

  double number(const json& j, const Path& p) const {
    if (!j.is_number()) fail(p, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(p, "expected a finite number");
    return x;
  }

  std::uint64_t uinteger(const json& j, const Path& p) const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
      if (j.get<std::int64_t>() < 0) fail(p, "expected a nonnegative integer");
      return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    if (j.is_number_float()) {
      const double x = j.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    fail(p, "expected a nonnegative integer");
  }

  std::string string(const json& j, const Path& p) const {
    if (!j.is_string()) fail(p, "expected a string");
    return j.get<std::string>();
  }

  bool boolean(const json& j, const Path& p) const {
    if (!j.is_boolean()) fail(p, "expected true or false");
    return j.get<bool>();
  }

  std::vector<double> numbers(const json& j, const Path& p) const {
    if (!j.is_array()) fail(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(p, std::to_string(i))));
    return out;
  }

  std::vector<std::uint64_t> uintegers(const json& j, const Path& p) const {
    if (!j.is_array()) fail(p, "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(uinteger(j[i], child(p, std::to_string(i))));
    return out;
  }

  std::vector<std::size_t> sizes(const json& j, const Path& p) const {
    std::vector<std::size_t> out;
    for (auto x : uintegers(j, p)) out.push_back(static_cast<std::size_t>(x));
    return out;
  }

  const std::string& text() const { return text_; }

 private:
  const std::string& text_;
};

inline SlotMode parse_slots(const Reader& rd, const json& j, const Path& p) {
  const auto s = rd.string(j, p);
  if (s == "first") return SlotMode::First;
  if (s == "random") return SlotMode::Random;
  if (s == "blocks") return SlotMode::Blocks;
  rd.fail(p, "slots must be one of first, random, blocks");
}

inline LawSpec parse_law(const Reader& rd, const json& j, const Path& p, int d, int default_order) {
  rd.allow_keys(j, p, {"kind", "order", "kernel"});
  if (!j.contains("kind")) rd.fail(p, "law needs a 'kind'");
  const auto kind = rd.string(j.at("kind"), Reader::child(p, "kind"));
  int order = default_order;
  if (j.contains("order")) order = static_cast<int>(rd.uinteger(j.at("order"), Reader::child(p, "order")));
  LawSpec law;
  if (kind == "identity") law = LawSpec::identity(order, d);
  else if (kind == "binary_maxwell") law = LawSpec{LawKind::BinaryMaxwell, order, d};
  else if (kind == "kac_toy") law = LawSpec{LawKind::KacToy, order, d};
  else if (kind == "symmetric") law = LawSpec::symmetric(order, d);
  else if (kind == "symmetric_momentum") law = LawSpec::symmetric_momentum(order, d);
  else
    rd.fail(Reader::child(p, "kind"), "unknown law kind '" + kind +
                                          "' (identity, binary_maxwell, kac_toy, symmetric, symmetric_momentum)");
  if (j.contains("kernel")) {
    const auto kp = Reader::child(p, "kernel");
    if (law.kind != LawKind::KacToy) rd.fail(kp, "only kac_toy takes a kernel");
    const auto k = rd.string(j.at("kernel"), kp);
    if (k == "uniform") law.kernel = AngleKernel::Uniform;
    else if (k == "raised_cosine") law.kernel = AngleKernel::RaisedCosine;
    else rd.fail(kp, "kernel must be uniform or raised_cosine");
  }
  try {
    validate(law);
  } catch (const ContractViolation& e) {
    rd.fail(p, e.what());
  }
  return law;
}

inline MixtureSpec parse_mixture(const Reader& rd, const json& j, const Path& p) {
  rd.allow_keys(j, p, {"dimension", "betas", "laws"});
  int d = 1;
  if (j.contains("dimension")) {
    d = static_cast<int>(rd.uinteger(j.at("dimension"), Reader::child(p, "dimension")));
    if (d < 1) rd.fail(Reader::child(p, "dimension"), "dimension must be >= 1");
  }
  if (!j.contains("betas")) rd.fail(p, "mixture needs 'betas'");
  const auto betas = rd.numbers(j.at("betas"), Reader::child(p, "betas"));
  if (betas.empty()) rd.fail(Reader::child(p, "betas"), "mixture needs M >= 1");
  if (!j.contains("laws")) rd.fail(p, "mixture needs 'laws' (one entry per order, null for none)");
  const auto& jl = j.at("laws");
  const auto lp = Reader::child(p, "laws");
  if (!jl.is_array()) rd.fail(lp, "expected an array of laws");
  if (jl.size() != betas.size()) rd.fail(lp, "need exactly one law (or null) per weight");
  std::vector<std::optional<LawSpec>> laws(betas.size());
  for (std::size_t k = 0; k < jl.size(); ++k) {
    if (jl[k].is_null()) continue;
    laws[k] = parse_law(rd, jl[k], Reader::child(lp, std::to_string(k)), d, static_cast<int>(k + 1));
    if (laws[k]->order != static_cast<int>(k + 1))
      rd.fail(Reader::child(lp, std::to_string(k)), "law at position " + std::to_string(k + 1) + " must have order " +
                                                        std::to_string(k + 1));
  }
  try {
    return make_mixture(d, betas, laws);
  } catch (const ContractViolation& e) {
    rd.fail(Reader::child(p, "betas"), e.what());
  }
}

inline InitialLaw parse_initial(const Reader& rd, const json& j, const Path& p, int d) {
  rd.allow_keys(j, p, {"kind", "a", "velocities"});
  InitialLaw law;
  const auto kind = j.contains("kind") ? rd.string(j.at("kind"), Reader::child(p, "kind")) : "gaussian";
  if (kind == "gaussian") law.kind = InitialLaw::Kind::Gaussian;
  else if (kind == "uniform") law.kind = InitialLaw::Kind::Uniform;
  else if (kind == "two_point") law.kind = InitialLaw::Kind::TwoPoint;
  else if (kind == "deterministic") law.kind = InitialLaw::Kind::Deterministic;
  else rd.fail(Reader::child(p, "kind"), "initial kind must be gaussian, uniform, two_point or deterministic");
  if (j.contains("a")) {
    law.a = rd.number(j.at("a"), Reader::child(p, "a"));
    if (!(law.a > 0.0)) rd.fail(Reader::child(p, "a"), "a must be positive");
  }
  if (law.kind == InitialLaw::Kind::Deterministic) {
    if (!j.contains("velocities")) rd.fail(p, "deterministic initial data needs 'velocities'");
    const auto& jv = j.at("velocities");
    const auto vp = Reader::child(p, "velocities");
    if (!jv.is_array() || jv.empty()) rd.fail(vp, "expected a nonempty array");
    for (std::size_t i = 0; i < jv.size(); ++i) {
      const auto ip = Reader::child(vp, std::to_string(i));
      if (jv[i].is_array()) {
        auto v = rd.numbers(jv[i], ip);
        if (v.size() != static_cast<std::size_t>(d)) rd.fail(ip, "velocity must have d components");
        law.velocities.insert(law.velocities.end(), v.begin(), v.end());
      } else {
        law.velocities.push_back(rd.number(jv[i], ip));
      }
    }
    if (law.velocities.size() % static_cast<std::size_t>(d)) rd.fail(vp, "velocity list length must be a multiple of d");
  } else if (j.contains("velocities")) {
    rd.fail(Reader::child(p, "velocities"), "velocities only apply to deterministic initial data");
  }
  return law;
}

inline Primitive parse_primitive(const Reader& rd, const json& j, const Path& p) {
  Primitive g;
  const auto kind = j.contains("kind") ? rd.string(j.at("kind"), Reader::child(p, "kind")) : "";
  if (kind == "cosine") {
    g.kind = Primitive::Kind::Cosine;
    if (j.contains("xi")) {
      const auto& x = j.at("xi");
      g.xi = x.is_array() ? rd.numbers(x, Reader::child(p, "xi"))
                          : std::vector<double>{rd.number(x, Reader::child(p, "xi"))};
    }
  } else if (kind == "tanh") {
    g.kind = Primitive::Kind::Tanh;
    if (j.contains("a")) g.a = rd.number(j.at("a"), Reader::child(p, "a"));
  } else if (kind == "box") {
    g.kind = Primitive::Kind::Box;
    if (j.contains("lower")) g.lower = rd.number(j.at("lower"), Reader::child(p, "lower"));
    if (j.contains("upper")) g.upper = rd.number(j.at("upper"), Reader::child(p, "upper"));
  } else {
    rd.fail(Reader::child(p, "kind"), "primitive kind must be cosine, tanh or box");
  }
  return g;
}

inline ObservableSpec parse_observable(const Reader& rd, const json& j, const Path& p, int d) {
  rd.expect_object(j, p);
  ObservableSpec o;
  if (!j.contains("id")) rd.fail(p, "observable needs an 'id'");
  o.id = rd.string(j.at("id"), Reader::child(p, "id"));
  if (j.contains("factors")) {
    rd.allow_keys(j, p, {"id", "factors"});
    const auto fp = Reader::child(p, "factors");
    const auto& jf = j.at("factors");
    if (!jf.is_array() || jf.empty()) rd.fail(fp, "expected a nonempty array of primitives");
    for (std::size_t i = 0; i < jf.size(); ++i) {
      const auto ip = Reader::child(fp, std::to_string(i));
      rd.allow_keys(jf[i], ip, {"kind", "xi", "a", "lower", "upper"});
      o.factors.push_back(parse_primitive(rd, jf[i], ip));
    }
  } else {
    rd.allow_keys(j, p, {"id", "kind", "xi", "a", "lower", "upper", "s"});
    std::size_t s = 1;
    if (j.contains("s")) s = static_cast<std::size_t>(rd.uinteger(j.at("s"), Reader::child(p, "s")));
    if (s < 1) rd.fail(Reader::child(p, "s"), "s must be >= 1");
    o = ObservableSpec::tensor_power(o.id, parse_primitive(rd, j, p), s);
  }
  try {
    validate(o, d);
  } catch (const ContractViolation& e) {
    rd.fail(p, e.what());
  }
  return o;
}

inline void check_nonneg(const Reader& rd, double x, const Path& p) {
  if (!(x >= 0.0)) rd.fail(p, "must be >= 0");
}

}  // namespace config_detail

/// Applies one "dotted.path=value" override; the value is parsed as JSON
/// and falls back to a plain string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    if (node->is_array()) {
      char* end = nullptr;
      const unsigned long idx = std::strtoul(part.c_str(), &end, 10);
      if (*end != '\0' || idx >= node->size()) throw ConfigError("--set: bad array index '" + part + "' in '" + key + "'");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a non-object");
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

/// Parses and validates a configuration document. Every section is
/// optional here; subcommands check for the sections they need.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  using namespace config_detail;
  json doc;
  try {
    doc = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ConfigError("line " + std::to_string(line) + ": invalid JSON: " + e.what(), "/", line);
  }
  for (const auto& o : overrides) apply_override(doc, o);

  const Reader rd(text);
  const Path root;
  rd.allow_keys(doc, root,
                {"mixture", "initial", "sim", "meanfield", "observables", "chaos", "hierarchy", "laws_check", "seed",
                 "output_dir"});
  RunConfig c;
  c.resolved = doc;
  if (doc.contains("seed")) c.seed = rd.uinteger(doc.at("seed"), {"seed"});
  if (doc.contains("output_dir")) c.output_dir = rd.string(doc.at("output_dir"), {"output_dir"});

  int d = 1;
  if (doc.contains("mixture")) {
    c.mixture = parse_mixture(rd, doc.at("mixture"), {"mixture"});
    c.has_mixture = true;
    d = c.mixture.dimension;
  }
  if (doc.contains("initial")) c.initial = parse_initial(rd, doc.at("initial"), {"initial"}, d);

  if (doc.contains("observables")) {
    const auto& jo = doc.at("observables");
    if (!jo.is_array()) rd.fail({"observables"}, "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < jo.size(); ++i) {
      const Path p{"observables", std::to_string(i)};
      c.observables.push_back(parse_observable(rd, jo[i], p, d));
      if (!ids.insert(c.observables.back().id).second) rd.fail(p, "duplicate observable id '" + c.observables.back().id + "'");
    }
  }

  if (doc.contains("sim")) {
    const auto& j = doc.at("sim");
    const Path p{"sim"};
    rd.allow_keys(j, p, {"N", "t_end", "replicas", "sample_times", "slots", "keep_final_states"});
    auto& s = c.sim;
    s.present = true;
    if (!j.contains("N")) rd.fail(p, "sim needs 'N'");
    s.N = static_cast<std::size_t>(rd.uinteger(j.at("N"), {"sim", "N"}));
    if (j.contains("t_end")) s.t_end = rd.number(j.at("t_end"), {"sim", "t_end"});
    check_nonneg(rd, s.t_end, {"sim", "t_end"});
    if (j.contains("replicas")) s.replicas = static_cast<std::size_t>(rd.uinteger(j.at("replicas"), {"sim", "replicas"}));
    if (s.replicas < 1) rd.fail({"sim", "replicas"}, "replicas must be >= 1");
    if (j.contains("sample_times")) {
      s.sample_times = rd.numbers(j.at("sample_times"), {"sim", "sample_times"});
      for (double t : s.sample_times)
        if (t < 0.0 || t > s.t_end) rd.fail({"sim", "sample_times"}, "sample times must lie in [0, t_end]");
    }
    if (j.contains("slots")) s.slots = parse_slots(rd, j.at("slots"), {"sim", "slots"});
    if (j.contains("keep_final_states")) s.keep_final_states = rd.boolean(j.at("keep_final_states"), {"sim", "keep_final_states"});
    if (c.has_mixture && s.N < static_cast<std::size_t>(c.mixture.max_order()))
      rd.fail({"sim", "N"}, "N >= M required (N = " + std::to_string(s.N) + ", M = " +
                                std::to_string(c.mixture.max_order()) + ")");
  }

  if (doc.contains("meanfield")) {
    const auto& j = doc.at("meanfield");
    const Path p{"meanfield"};
    rd.allow_keys(j, p, {"n", "t_end", "replicas", "sample_times", "slots", "picard"});
    auto& m = c.meanfield;
    m.present = true;
    if (j.contains("n")) m.n = static_cast<std::size_t>(rd.uinteger(j.at("n"), {"meanfield", "n"}));
    if (j.contains("t_end")) m.t_end = rd.number(j.at("t_end"), {"meanfield", "t_end"});
    check_nonneg(rd, m.t_end, {"meanfield", "t_end"});
    if (j.contains("replicas")) m.replicas = static_cast<std::size_t>(rd.uinteger(j.at("replicas"), {"meanfield", "replicas"}));
    if (m.replicas < 1) rd.fail({"meanfield", "replicas"}, "replicas must be >= 1");
    if (j.contains("sample_times")) {
      m.sample_times = rd.numbers(j.at("sample_times"), {"meanfield", "sample_times"});
      for (double t : m.sample_times)
        if (t < 0.0 || t > m.t_end) rd.fail({"meanfield", "sample_times"}, "sample times must lie in [0, t_end]");
    }
    if (j.contains("slots")) m.slots = parse_slots(rd, j.at("slots"), {"meanfield", "slots"});
    if (c.has_mixture && m.n < static_cast<std::size_t>(c.mixture.max_order()))
      rd.fail({"meanfield", "n"}, "n >= M required");
    if (j.contains("picard")) {
      const auto& g = j.at("picard");
      const Path gp{"meanfield", "picard"};
      rd.allow_keys(g, gp, {"enabled", "L", "n_v", "n_theta", "n_t", "n_iter", "t_guard"});
      auto& pc = m.picard;
      if (g.contains("enabled")) pc.enabled = rd.boolean(g.at("enabled"), Reader::child(gp, "enabled"));
      if (g.contains("L")) pc.L = rd.number(g.at("L"), Reader::child(gp, "L"));
      if (!(pc.L > 0.0)) rd.fail(Reader::child(gp, "L"), "grid half-width L must be positive");
      auto sz = [&](const char* key, std::size_t& out, std::size_t lo) {
        if (!g.contains(key)) return;
        out = static_cast<std::size_t>(rd.uinteger(g.at(key), Reader::child(gp, key)));
        if (out < lo) rd.fail(Reader::child(gp, key), std::string(key) + " must be >= " + std::to_string(lo));
      };
      sz("n_v", pc.n_v, 3);
      sz("n_theta", pc.n_theta, 2);
      sz("n_t", pc.n_t, 1);
      sz("n_iter", pc.n_iter, 1);
      if (g.contains("t_guard")) {
        pc.t_guard = rd.number(g.at("t_guard"), Reader::child(gp, "t_guard"));
        if (!(pc.t_guard > 0.0)) rd.fail(Reader::child(gp, "t_guard"), "t_guard must be positive");
      }
    }
  }

  if (doc.contains("chaos")) {
    const auto& j = doc.at("chaos");
    const Path p{"chaos"};
    rd.allow_keys(j, p, {"N_grid", "s_list", "t_list", "target_stderr", "pilot_replicas", "min_replicas",
                         "max_replicas", "mf_n", "mf_replicas", "slots", "pass_threshold"});
    auto& ch = c.chaos;
    ch.present = true;
    if (!j.contains("N_grid")) rd.fail(p, "chaos needs 'N_grid'");
    ch.N_grid = rd.sizes(j.at("N_grid"), {"chaos", "N_grid"});
    if (ch.N_grid.empty()) rd.fail({"chaos", "N_grid"}, "N_grid must be nonempty");
    if (j.contains("s_list")) ch.s_list = rd.sizes(j.at("s_list"), {"chaos", "s_list"});
    if (ch.s_list.empty()) rd.fail({"chaos", "s_list"}, "s_list must be nonempty");
    for (auto s : ch.s_list)
      if (s < 1) rd.fail({"chaos", "s_list"}, "s must be >= 1");
    if (j.contains("t_list")) ch.t_list = rd.numbers(j.at("t_list"), {"chaos", "t_list"});
    if (ch.t_list.empty()) rd.fail({"chaos", "t_list"}, "t_list must be nonempty");
    for (double t : ch.t_list) check_nonneg(rd, t, {"chaos", "t_list"});
    auto& b = ch.budget;
    if (j.contains("target_stderr")) b.target_stderr = rd.number(j.at("target_stderr"), {"chaos", "target_stderr"});
    if (!(b.target_stderr > 0.0)) rd.fail({"chaos", "target_stderr"}, "target_stderr must be positive");
    auto sz = [&](const char* key, std::size_t& out) {
      if (j.contains(key)) out = static_cast<std::size_t>(rd.uinteger(j.at(key), {"chaos", key}));
    };
    sz("pilot_replicas", b.pilot_replicas);
    sz("min_replicas", b.min_replicas);
    sz("max_replicas", b.max_replicas);
    sz("mf_n", b.mf_n);
    sz("mf_replicas", b.mf_replicas);
    if (b.pilot_replicas < 2) rd.fail({"chaos", "pilot_replicas"}, "pilot_replicas must be >= 2");
    if (b.max_replicas < 2) rd.fail({"chaos", "max_replicas"}, "max_replicas must be >= 2");
    if (j.contains("slots")) ch.slots = parse_slots(rd, j.at("slots"), {"chaos", "slots"});
    if (j.contains("pass_threshold")) ch.pass_threshold = rd.number(j.at("pass_threshold"), {"chaos", "pass_threshold"});
    if (!(ch.pass_threshold >= 0.0 && ch.pass_threshold <= 1.0))
      rd.fail({"chaos", "pass_threshold"}, "pass_threshold must lie in [0, 1]");
  }

  if (doc.contains("hierarchy")) {
    const auto& j = doc.at("hierarchy");
    const Path p{"hierarchy"};
    rd.allow_keys(j, p, {"epsilon", "T", "N_sweep", "s_sweep", "k_sweep"});
    auto& h = c.hierarchy;
    if (j.contains("epsilon")) h.epsilon = rd.number(j.at("epsilon"), {"hierarchy", "epsilon"});
    if (!(h.epsilon >= 0.0 && h.epsilon < 1.0)) rd.fail({"hierarchy", "epsilon"}, "epsilon must lie in [0, 1)");
    if (j.contains("T")) {
      h.T = rd.number(j.at("T"), {"hierarchy", "T"});
      if (!(h.T > 0.0)) rd.fail({"hierarchy", "T"}, "T must be positive");
    }
    if (j.contains("N_sweep")) h.N_sweep = rd.uintegers(j.at("N_sweep"), {"hierarchy", "N_sweep"});
    if (j.contains("s_sweep")) h.s_sweep = rd.uintegers(j.at("s_sweep"), {"hierarchy", "s_sweep"});
    if (j.contains("k_sweep")) h.k_sweep = rd.uintegers(j.at("k_sweep"), {"hierarchy", "k_sweep"});
    for (auto N : h.N_sweep)
      if (N < 1) rd.fail({"hierarchy", "N_sweep"}, "N must be >= 1");
    for (auto s : h.s_sweep)
      if (s < 1) rd.fail({"hierarchy", "s_sweep"}, "s must be >= 1");
  }

  if (doc.contains("laws_check")) {
    const auto& j = doc.at("laws_check");
    const Path p{"laws_check"};
    rd.allow_keys(j, p, {"samples", "h1_samples", "laws"});
    auto& lc = c.laws_check;
    if (j.contains("samples")) lc.samples = static_cast<std::size_t>(rd.uinteger(j.at("samples"), {"laws_check", "samples"}));
    if (j.contains("h1_samples"))
      lc.h1_samples = static_cast<std::size_t>(rd.uinteger(j.at("h1_samples"), {"laws_check", "h1_samples"}));
    if (lc.samples < 2) rd.fail({"laws_check", "samples"}, "samples must be >= 2");
    if (j.contains("laws")) {
      const auto& jl = j.at("laws");
      if (!jl.is_array()) rd.fail({"laws_check", "laws"}, "expected an array of laws");
      for (std::size_t i = 0; i < jl.size(); ++i) {
        const Path lp{"laws_check", "laws", std::to_string(i)};
        // Each entry may carry its own dimension for convenience.
        json entry = jl[i];
        int ld = d;
        if (entry.is_object() && entry.contains("dimension")) {
          ld = static_cast<int>(rd.uinteger(entry.at("dimension"), Reader::child(lp, "dimension")));
          if (ld < 1) rd.fail(Reader::child(lp, "dimension"), "dimension must be >= 1");
          entry.erase("dimension");
        }
        if (!entry.is_object()) rd.fail(lp, "expected a law object");
        const auto kind = entry.contains("kind") && entry.at("kind").is_string() ? entry.at("kind").get<std::string>() : "";
        if (!entry.contains("order") && kind != "binary_maxwell" && kind != "kac_toy")
          rd.fail(lp, "law needs an 'order'");
        if (kind == "kac_toy" && !jl[i].contains("dimension")) ld = 1;
        lc.laws.push_back(parse_law(rd, entry, lp, ld, 2));
      }
    }
  }
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  return parse_config(read_file(path), overrides);
}

}  // namespace kac
