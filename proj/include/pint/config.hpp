#pragma once

// TOML experiment and audit configs. Files are parsed with toml++, converted
// to JSON and read with strict key checking, so the echoed config (the
// to_json form written back as TOML) parses to the same structure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "pint/audit.hpp"
#include "pint/errors.hpp"
#include "pint/experiment.hpp"

namespace pint {

// ---------------------------------------------------------------------------
// TOML <-> JSON

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw ConfigError("unsupported TOML value (dates and times are not used)");
}

namespace detail {

inline void insert_json(toml::table& t, const std::string& key, const nlohmann::json& v);

inline toml::array json_array_to_toml(const nlohmann::json& j) {
  toml::array a;
  for (const auto& v : j) {
    if (v.is_object()) {
      toml::table sub;
      for (const auto& [k, x] : v.items()) insert_json(sub, k, x);
      a.push_back(std::move(sub));
    } else if (v.is_array()) {
      a.push_back(json_array_to_toml(v));
    } else if (v.is_string()) {
      a.push_back(v.get<std::string>());
    } else if (v.is_boolean()) {
      a.push_back(v.get<bool>());
    } else if (v.is_number_integer()) {
      a.push_back(v.get<std::int64_t>());
    } else if (v.is_number()) {
      a.push_back(v.get<double>());
    }
  }
  return a;
}

inline void insert_json(toml::table& t, const std::string& key, const nlohmann::json& v) {
  if (v.is_object()) {
    toml::table sub;
    for (const auto& [k, x] : v.items()) insert_json(sub, k, x);
    t.insert_or_assign(key, std::move(sub));
  } else if (v.is_array()) {
    t.insert_or_assign(key, json_array_to_toml(v));
  } else if (v.is_string()) {
    t.insert_or_assign(key, v.get<std::string>());
  } else if (v.is_boolean()) {
    t.insert_or_assign(key, v.get<bool>());
  } else if (v.is_number_integer()) {
    t.insert_or_assign(key, v.get<std::int64_t>());
  } else if (v.is_number()) {
    t.insert_or_assign(key, v.get<double>());
  }
}

}  // namespace detail

inline toml::table json_to_toml(const nlohmann::json& j) {
  toml::table t;
  for (const auto& [k, v] : j.items()) detail::insert_json(t, k, v);
  return t;
}

inline std::string to_toml_string(const nlohmann::json& j) {
  std::ostringstream s;
  s << json_to_toml(j) << '\n';
  return s.str();
}

// ---------------------------------------------------------------------------
// loading and overrides

inline toml::table parse_toml_text(const std::string& text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream s;
    s << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(s.str());
  }
}

inline toml::table load_toml(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_toml_text(s.str(), path.string());
}

/// `dotted.key=value`; value is read as a TOML value, falling back to a bare
/// string. Missing intermediate tables are created.
inline void apply_override(toml::table& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + text);
  } catch (const toml::parse_error&) {
    parsed.insert_or_assign("v", text);
  }

  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (k.empty()) throw ConfigError("override key '" + path + "' has an empty part");
    keys.push_back(k);
  }
  toml::table* t = &root;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    toml::node* n = t->get(keys[i]);
    if (!n) {
      t->insert_or_assign(keys[i], toml::table{});
      n = t->get(keys[i]);
    }
    t = n->as_table();
    if (!t) throw ConfigError("override key '" + path + "': '" + keys[i] + "' is not a table");
  }
  t->insert_or_assign(keys.back(), *parsed.get("v"));
}

// ---------------------------------------------------------------------------
// strict readers

namespace detail {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a table");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
  }

  bool has(const char* k) const { return j_.contains(k); }

  Reader sub(const char* k) const {
    if (!has(k)) throw ConfigError("missing table '" + path(k) + "'");
    return Reader(j_.at(k), path(k));
  }

  template <class T>
  void opt(const char* k, T& out) const {
    if (has(k)) out = get<T>(k);
  }

  template <class T>
  T get(const char* k) const {
    if (!has(k)) throw ConfigError("missing key '" + path(k) + "'");
    return convert<T>(j_.at(k), path(k));
  }

  const nlohmann::json& raw(const char* k) const { return j_.at(k); }
  const nlohmann::json& json() const { return j_; }
  std::string path(const std::string& k) const { return where_.empty() ? k : where_ + "." + k; }

  template <class T>
  static T convert(const nlohmann::json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      const auto x = v.get<std::int64_t>();
      if (std::is_unsigned_v<T> && x < 0) throw ConfigError(where + " must be >= 0");
      return static_cast<T>(x);
    } else {
      // vectors
      if (!v.is_array()) throw ConfigError(where + " must be an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
};

inline Scheme scheme_of(const Reader& r, const char* key) {
  const auto id = r.get<std::string>(key);
  try {
    return scheme_from_string(id);
  } catch (const std::exception&) {
    throw ConfigError(r.path(key) + ": unknown scheme '" + id + "'");
  }
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  using detail::Reader;
  const Reader top(j, "");
  top.allow({"schema", "name", "seed", "problem", "discretization", "method", "output", "sweep"});
  ExperimentConfig c;
  c.schema = top.get<int>("schema");
  if (c.schema != 1) throw ConfigError("unsupported schema version " + std::to_string(c.schema));
  top.opt("name", c.name);
  top.opt("seed", c.seed);

  const Reader prob = top.sub("problem");
  prob.allow({"preset", "params"});
  c.preset = prob.get<std::string>("preset");
  if (prob.has("params")) {
    const Reader params = prob.sub("params");
    for (const auto& [k, v] : params.json().items())
      c.overrides[k] = Reader::convert<double>(v, params.path(k));
  }

  if (top.has("discretization")) {
    const Reader d = top.sub("discretization");
    d.allow({"n"});
    d.opt("n", c.n);
  }

  const Reader m = top.sub("method");
  m.allow({"kind", "serial", "sdc", "mlsdc", "parareal", "pfasst"});
  const auto kind = m.get<std::string>("kind");
  try {
    c.method = method_kind_from_string(kind);
  } catch (const ConfigError&) {
    throw ConfigError("method.kind: unknown method '" + kind + "'");
  }
  for (const char* other : {"serial", "sdc", "mlsdc", "parareal", "pfasst"})
    if (m.has(other) && to_string(c.method) != other)
      throw ConfigError("method." + std::string(other) + " given but method.kind is '" + kind + "'");

  const char* section = nullptr;
  switch (c.method) {
    case MethodKind::serial: section = "serial"; break;
    case MethodKind::sdc: section = "sdc"; break;
    case MethodKind::mlsdc: section = "mlsdc"; break;
    case MethodKind::parareal: section = "parareal"; break;
    case MethodKind::pfasst: section = "pfasst"; break;
  }
  const nlohmann::json empty = nlohmann::json::object();
  const Reader s = m.has(section) ? m.sub(section) : Reader(empty, std::string("method.") + section);
  switch (c.method) {
    case MethodKind::serial:
      s.allow({"scheme", "steps"});
      if (s.has("scheme")) c.serial.scheme = detail::scheme_of(s, "scheme");
      s.opt("steps", c.serial.steps);
      break;
    case MethodKind::sdc:
      s.allow({"nodes", "steps", "tol", "max_sweeps"});
      s.opt("nodes", c.sdc.nodes);
      s.opt("steps", c.sdc.steps);
      s.opt("tol", c.sdc.tol);
      s.opt("max_sweeps", c.sdc.max_sweeps);
      break;
    case MethodKind::mlsdc:
      s.allow({"nodes", "coarse_nodes", "coarse_n", "steps", "tol", "max_iter"});
      s.opt("nodes", c.mlsdc.nodes);
      s.opt("coarse_nodes", c.mlsdc.coarse_nodes);
      s.opt("coarse_n", c.mlsdc.coarse_n);
      s.opt("steps", c.mlsdc.steps);
      s.opt("tol", c.mlsdc.tol);
      s.opt("max_iter", c.mlsdc.max_iter);
      break;
    case MethodKind::parareal: {
      s.allow({"n_slices", "fine", "fine_steps", "coarse", "coarse_steps", "tol", "max_k",
               "freeze_out", "norm", "baseline"});
      auto& p = c.parareal;
      p.fine = {Scheme::imex_rk2, 1};
      p.coarse = {Scheme::imex_rk2, 1};
      s.opt("n_slices", p.n_slices);
      if (s.has("fine")) p.fine.scheme = detail::scheme_of(s, "fine");
      if (s.has("coarse")) p.coarse.scheme = detail::scheme_of(s, "coarse");
      s.opt("fine_steps", p.fine.steps);
      s.opt("coarse_steps", p.coarse.steps);
      s.opt("tol", p.tol);
      s.opt("max_k", p.max_k);
      s.opt("freeze_out", p.freeze_out);
      if (s.has("norm")) p.norm = increment_norm_from_string(s.get<std::string>("norm"));
      c.baseline = "fine";
      s.opt("baseline", c.baseline);
      break;
    }
    case MethodKind::pfasst: {
      s.allow({"n_steps", "nodes", "coarse_n", "coarse_nodes", "use_coarse", "tol", "max_iter",
               "predictor_sweeps", "coarse_sweeps", "baseline"});
      auto& p = c.pfasst;
      s.opt("n_steps", p.n_steps);
      s.opt("nodes", p.m_fine);
      s.opt("coarse_n", p.n_coarse);
      s.opt("coarse_nodes", p.m_coarse);
      s.opt("use_coarse", p.use_coarse);
      s.opt("tol", p.tol);
      s.opt("max_iter", p.max_iter);
      s.opt("predictor_sweeps", p.predictor_sweeps);
      s.opt("coarse_sweeps", p.coarse_sweeps);
      c.baseline = "SDC";
      s.opt("baseline", c.baseline);
      break;
    }
  }

  if (top.has("output")) {
    const Reader o = top.sub("output");
    o.allow({"formats"});
    o.opt("formats", c.formats);
  }
  c.validate();
  return c;
}

inline std::string echo_toml(const ExperimentConfig& c) { return to_toml_string(c.to_json()); }

inline ExperimentConfig parse_experiment(toml::table t,
                                         const std::vector<std::string>& overrides = {}) {
  for (const auto& o : overrides) apply_override(t, o);
  return experiment_from_json(toml_to_json(t));
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {}) {
  return parse_experiment(load_toml(path), overrides);
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepSpec {
  std::string parameter;  // dotted config path
  std::vector<double> values;
};

inline std::optional<SweepSpec> sweep_from_json(const nlohmann::json& j) {
  if (!j.contains("sweep")) return std::nullopt;
  const detail::Reader r(j.at("sweep"), "sweep");
  r.allow({"parameter", "values"});
  SweepSpec s{r.get<std::string>("parameter"), r.get<std::vector<double>>("values")};
  if (s.values.empty()) throw ConfigError("sweep.values is empty");
  return s;
}

/// Text of a sweep value as a TOML literal: integral values stay integers.
inline std::string sweep_literal(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    std::ostringstream s;
    s << static_cast<long long>(v);
    return s.str();
  }
  return fmt_num(v);
}

/// Config of one sweep row: the base table with `parameter = value` applied.
inline ExperimentConfig sweep_row(const toml::table& base, const std::string& parameter,
                                  double value) {
  toml::table t = base;
  t.erase("sweep");
  apply_override(t, parameter + "=" + sweep_literal(value));
  return experiment_from_json(toml_to_json(t));
}

// ---------------------------------------------------------------------------
// audit configs

inline bool is_audit_config(const toml::table& t) { return t.contains("audit"); }

/// Run paths and the measured record path resolve against `base_dir`.
inline AuditConfig audit_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir) {
  using detail::Reader;
  const Reader top(j, "");
  top.allow({"schema", "name", "audit"});
  AuditConfig a;
  a.schema = top.get<int>("schema");
  if (a.schema != 1) throw ConfigError("unsupported schema version " + std::to_string(a.schema));
  top.opt("name", a.name);
  const Reader r = top.sub("audit");
  r.allow({"runs", "speedup_claim", "measured", "roster", "inner_tol", "sensitivity",
           "work_precision", "thresholds"});
  r.opt("runs", a.run_paths);
  r.opt("speedup_claim", a.speedup_claim);
  r.opt("measured", a.measured_path);
  r.opt("roster", a.roster);
  if (r.has("inner_tol")) a.inner_tol = r.get<double>("inner_tol");

  for (const auto& name : a.roster)
    if (name != "SDC" && name != "MLSDC") {
      try {
        (void)scheme_from_string(name);
      } catch (const std::exception&) {
        throw ConfigError("audit.roster: unknown method '" + name + "'");
      }
    }

  for (const auto& p : a.run_paths) {
    const auto path = base_dir / p;
    try {
      a.runs.push_back(load_experiment(path));
    } catch (const ConfigError& e) {
      throw ConfigError("audit run " + p + ": " + e.what());
    }
  }
  if (!a.measured_path.empty()) {
    std::ifstream in(base_dir / a.measured_path);
    if (!in) throw ConfigError("cannot read measured record " + a.measured_path);
    try {
      a.measured = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("measured record " + a.measured_path + ": " + e.what());
    }
  }

  if (r.has("sensitivity")) {
    const auto& arr = r.raw("sensitivity");
    if (!arr.is_array()) throw ConfigError("audit.sensitivity must be an array of tables");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Reader s(arr[i], "audit.sensitivity[" + std::to_string(i) + "]");
      s.allow({"parameter", "values"});
      SensitivitySpec spec{s.get<std::string>("parameter"), s.get<std::vector<double>>("values")};
      if (spec.values.size() < 2) throw ConfigError(s.path("values") + " needs 2 or more values");
      a.sensitivity.push_back(spec);
    }
  }

  if (r.has("work_precision")) {
    const Reader w = r.sub("work_precision");
    w.allow({"preset", "params", "n", "methods"});
    WorkPrecisionSpec spec;
    spec.preset = w.get<std::string>("preset");
    if (w.has("params"))
      for (const auto& [k, v] : w.raw("params").items())
        spec.overrides[k] = Reader::convert<double>(v, "audit.work_precision.params." + k);
    w.opt("n", spec.n);
    if (!is_power_of_two(spec.n)) throw ConfigError("audit.work_precision.n must be a power of two");
    (void)make_problem(spec.preset, spec.overrides);
    const auto& arr = w.raw("methods");
    if (!arr.is_array() || arr.empty())
      throw ConfigError("audit.work_precision.methods must be a non-empty array of tables");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Reader m(arr[i], "audit.work_precision.methods[" + std::to_string(i) + "]");
      m.allow({"label", "parallel", "scheme", "coarse", "coarse_steps", "n_slices", "tol", "ladder"});
      WorkPrecisionMethod wm;
      wm.label = m.get<std::string>("label");
      m.opt("parallel", wm.parallel);
      wm.scheme = detail::scheme_of(m, "scheme");
      if (m.has("coarse")) wm.coarse = detail::scheme_of(m, "coarse");
      m.opt("coarse_steps", wm.coarse_steps);
      m.opt("n_slices", wm.n_slices);
      m.opt("tol", wm.tol);
      wm.ladder = m.get<std::vector<long>>("ladder");
      if (wm.ladder.size() < 3) throw ConfigError(m.path("ladder") + " needs 3 or more rungs");
      if (wm.n_slices < 1 || wm.coarse_steps < 1)
        throw ConfigError(m.path("n_slices") + " and coarse_steps must be >= 1");
      spec.methods.push_back(wm);
    }
    a.work_precision = spec;
  }

  if (r.has("thresholds")) {
    const Reader t = r.sub("thresholds");
    t.allow({"steady", "sensitivity_ratio", "resolution_change", "resolution_margin",
             "tolerance_ratio", "baseline_ratio", "error_slack"});
    auto& th = a.thresholds;
    t.opt("steady", th.steady);
    t.opt("sensitivity_ratio", th.sensitivity_ratio);
    t.opt("resolution_change", th.resolution_change);
    t.opt("resolution_margin", th.resolution_margin);
    t.opt("tolerance_ratio", th.tolerance_ratio);
    t.opt("baseline_ratio", th.baseline_ratio);
    t.opt("error_slack", th.error_slack);
  }
  return a;
}

inline AuditConfig load_audit(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {}) {
  toml::table t = load_toml(path);
  for (const auto& o : overrides) apply_override(t, o);
  return audit_from_json(toml_to_json(t), path.parent_path());
}

}  // namespace pint
