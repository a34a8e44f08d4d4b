#pragma once

// One configured experiment: a problem, a grid and a method, executed into a
// deterministic JSON record plus CSV tables.
//
// Work is counted in rhs evaluations weighted by n log2 n, the same unit the
// collocation sweeps use, so steppers, SDC, MLSDC and PFASST costs compare
// directly.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pint/collocation.hpp"
#include "pint/errors.hpp"
#include "pint/hash.hpp"
#include "pint/parareal.hpp"
#include "pint/pfasst.hpp"
#include "pint/problems.hpp"
#include "pint/reference.hpp"
#include "pint/speedup.hpp"
#include "pint/steppers.hpp"

namespace pint {

enum class MethodKind { serial, sdc, mlsdc, parareal, pfasst };

inline std::string to_string(MethodKind m) {
  switch (m) {
    case MethodKind::serial: return "serial";
    case MethodKind::sdc: return "sdc";
    case MethodKind::mlsdc: return "mlsdc";
    case MethodKind::parareal: return "parareal";
    case MethodKind::pfasst: return "pfasst";
  }
  return "?";
}

inline MethodKind method_kind_from_string(const std::string& s) {
  for (MethodKind m : {MethodKind::serial, MethodKind::sdc, MethodKind::mlsdc,
                       MethodKind::parareal, MethodKind::pfasst})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + s + "'");
}

inline bool is_pint(MethodKind m) {
  return m == MethodKind::parareal || m == MethodKind::pfasst;
}

struct SerialMethod {
  Scheme scheme = Scheme::imex_rk2;
  long steps = 32;
};

struct SdcMethod {
  std::size_t nodes = 5;
  int steps = 8;
  double tol = 1e-10;
  int max_sweeps = 100;
};

struct MlsdcMethod {
  std::size_t nodes = 5;
  std::size_t coarse_nodes = 5;
  std::size_t coarse_n = 8;
  int steps = 8;
  double tol = 1e-10;
  int max_iter = 100;
};

struct ExperimentConfig {
  int schema = 1;
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string preset = "nls";
  std::map<std::string, double> overrides;  // problem parameters
  std::size_t n = 32;
  MethodKind method = MethodKind::serial;
  SerialMethod serial;
  SdcMethod sdc;
  MlsdcMethod mlsdc;
  PararealConfig parareal;
  PfasstConfig pfasst;
  /// Serial method a PinT speedup is claimed against: "fine" (the Parareal
  /// fine propagator on one processor), "SDC", "MLSDC" or a stepper id.
  std::string baseline = "fine";
  std::vector<std::string> formats{"json", "csv"};

  Problem problem() const;
  void validate() const;
  nlohmann::json to_json() const;
  std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

// ---------------------------------------------------------------------------
// problems from names and parameter maps

inline std::map<std::string, double> problem_parameters(const Problem& p) {
  std::map<std::string, double> out;
  const nlohmann::json j = p.to_json();
  for (const auto& [k, v] : j["params"].items()) {
    if (v.is_array()) {
      out[k] = v[0].get<double>();
      out[k + "_imag"] = v[1].get<double>();
    } else {
      out[k] = v.get<double>();
    }
  }
  return out;
}

/// Preset with parameters replaced; unknown parameter names are rejected.
inline Problem make_problem(const std::string& preset,
                            const std::map<std::string, double>& overrides) {
  const Problem base = named_problem(preset);
  if (overrides.empty()) return base;
  auto known = problem_parameters(base);
  for (const auto& [k, v] : overrides) {
    if (!known.count(k))
      throw ConfigError("problem '" + preset + "' has no parameter '" + k + "'");
    known[k] = v;
  }
  auto get = [&](const char* k) { return known.at(k); };
  switch (base.kind()) {
    case ProblemKind::adr: {
      AdrParams p;
      p.v = get("v");
      p.gamma = get("gamma");
      p.nu = get("nu");
      p.beta_r = get("beta_r");
      p.a = get("a");
      p.b = get("b");
      p.d = get("d");
      p.sigma = get("sigma");
      p.length = get("length");
      p.t_final = get("t_final");
      return Problem(preset, p);
    }
    case ProblemKind::nls: {
      NlsParams p;
      p.length = get("length");
      p.t_final = get("t_final");
      p.breather_a = get("breather_a");
      return Problem(preset, p);
    }
    case ProblemKind::ks: {
      KsParams p;
      p.length = get("length");
      p.t_final = get("t_final");
      return Problem(preset, p);
    }
    case ProblemKind::linear: {
      LinearParams p;
      p.lambda_i = {get("lambda_i"), get("lambda_i_imag")};
      p.lambda_e = {get("lambda_e"), get("lambda_e_imag")};
      p.nu = get("nu");
      p.amplitude = get("amplitude");
      p.length = get("length");
      p.t_final = get("t_final");
      return Problem(preset, p);
    }
  }
  return base;
}

inline Problem with_parameter(const Problem& problem, const std::string& key,
                              double value) {
  auto params = problem_parameters(problem);
  params[key] = value;
  return make_problem(problem.name(), params);
}

inline Problem ExperimentConfig::problem() const {
  return make_problem(preset, overrides);
}

inline void ExperimentConfig::validate() const {
  if (schema != 1) throw ConfigError("unsupported schema version " + std::to_string(schema));
  if (!is_power_of_two(n) || n < 2)
    throw ConfigError("discretization.n must be a power of two >= 2");
  (void)problem();
  switch (method) {
    case MethodKind::serial:
      if (serial.steps < 1) throw ConfigError("serial: steps must be >= 1");
      break;
    case MethodKind::sdc:
      if (sdc.nodes < 2 || sdc.steps < 1 || !(sdc.tol > 0.0) || sdc.max_sweeps < 1)
        throw ConfigError("sdc: need nodes >= 2, steps >= 1, tol > 0, max_sweeps >= 1");
      break;
    case MethodKind::mlsdc:
      if (mlsdc.nodes < 2 || mlsdc.coarse_nodes < 2 || mlsdc.coarse_nodes > mlsdc.nodes)
        throw ConfigError("mlsdc: coarse_nodes must lie in [2, nodes]");
      if (!is_power_of_two(mlsdc.coarse_n) || mlsdc.coarse_n < 2 || mlsdc.coarse_n > n)
        throw ConfigError("mlsdc: coarse_n must be a power of two <= n");
      if (mlsdc.steps < 1 || !(mlsdc.tol > 0.0) || mlsdc.max_iter < 1)
        throw ConfigError("mlsdc: need steps >= 1, tol > 0, max_iter >= 1");
      break;
    case MethodKind::parareal:
      parareal.validate();
      if (baseline != "fine") (void)scheme_from_string(baseline);
      break;
    case MethodKind::pfasst: {
      PfasstConfig c = pfasst;
      c.n_fine = n;
      c.validate();
      if (baseline != "SDC" && baseline != "MLSDC") (void)scheme_from_string(baseline);
      if (baseline == "MLSDC" && !pfasst.use_coarse)
        throw ConfigError("pfasst: MLSDC baseline needs the coarse level");
      break;
    }
  }
  for (const auto& f : formats)
    if (f != "json" && f != "csv" && f != "md")
      throw ConfigError("unknown output format '" + f + "'");
}

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["schema"] = schema;
  j["name"] = name;
  j["seed"] = seed;
  j["problem"]["preset"] = preset;
  j["problem"]["params"] = problem_parameters(problem());
  j["discretization"]["n"] = n;
  j["method"]["kind"] = to_string(method);
  switch (method) {
    case MethodKind::serial:
      j["method"]["serial"] = {{"scheme", to_string(serial.scheme)},
                               {"steps", serial.steps}};
      break;
    case MethodKind::sdc:
      j["method"]["sdc"] = {{"nodes", sdc.nodes}, {"steps", sdc.steps},
                            {"tol", sdc.tol}, {"max_sweeps", sdc.max_sweeps}};
      break;
    case MethodKind::mlsdc:
      j["method"]["mlsdc"] = {{"nodes", mlsdc.nodes}, {"coarse_nodes", mlsdc.coarse_nodes},
                              {"coarse_n", mlsdc.coarse_n}, {"steps", mlsdc.steps},
                              {"tol", mlsdc.tol}, {"max_iter", mlsdc.max_iter}};
      break;
    case MethodKind::parareal:
      j["method"]["parareal"] = {
          {"n_slices", parareal.n_slices},
          {"fine", to_string(parareal.fine.scheme)},
          {"fine_steps", parareal.fine.steps},
          {"coarse", to_string(parareal.coarse.scheme)},
          {"coarse_steps", parareal.coarse.steps},
          {"tol", parareal.tol},
          {"max_k", parareal.max_k},
          {"freeze_out", parareal.freeze_out},
          {"norm", to_string(parareal.norm)},
          {"baseline", baseline}};
      break;
    case MethodKind::pfasst:
      j["method"]["pfasst"] = {
          {"n_steps", pfasst.n_steps},
          {"nodes", pfasst.m_fine},
          {"coarse_n", pfasst.n_coarse},
          {"coarse_nodes", pfasst.m_coarse},
          {"use_coarse", pfasst.use_coarse},
          {"tol", pfasst.tol},
          {"max_iter", pfasst.max_iter},
          {"predictor_sweeps", pfasst.predictor_sweeps},
          {"coarse_sweeps", pfasst.coarse_sweeps},
          {"baseline", baseline}};
      break;
  }
  j["output"]["formats"] = formats;
  return j;
}

// ---------------------------------------------------------------------------
// work accounting

inline double grid_work(std::size_t n) {
  return static_cast<double>(n) * std::log2(static_cast<double>(n));
}

inline double stepper_work(Scheme s, long steps, std::size_t n) {
  return static_cast<double>(steps) * stepper_spec(s).cost_units * grid_work(n);
}

inline int nominal_order(const ExperimentConfig& c) {
  switch (c.method) {
    case MethodKind::serial: return stepper_spec(c.serial.scheme).nominal_order;
    case MethodKind::sdc: return 2 * static_cast<int>(c.sdc.nodes) - 2;
    case MethodKind::mlsdc: return 2 * static_cast<int>(c.mlsdc.nodes) - 2;
    case MethodKind::parareal: return stepper_spec(c.parareal.fine.scheme).nominal_order;
    case MethodKind::pfasst: return 2 * static_cast<int>(c.pfasst.m_fine) - 2;
  }
  return 0;
}

/// Temporal resolution: total fine steps over [0, T_F].
inline long time_steps(const ExperimentConfig& c) {
  switch (c.method) {
    case MethodKind::serial: return c.serial.steps;
    case MethodKind::sdc: return c.sdc.steps;
    case MethodKind::mlsdc: return c.mlsdc.steps;
    case MethodKind::parareal: return c.parareal.n_slices * c.parareal.fine.steps;
    case MethodKind::pfasst: return c.pfasst.n_steps;
  }
  return 0;
}

/// Outer iteration tolerance, if the method iterates.
inline std::optional<double> outer_tolerance(const ExperimentConfig& c) {
  switch (c.method) {
    case MethodKind::serial: return std::nullopt;
    case MethodKind::sdc: return c.sdc.tol;
    case MethodKind::mlsdc: return c.mlsdc.tol;
    case MethodKind::parareal: return c.parareal.tol;
    case MethodKind::pfasst: return c.pfasst.tol;
  }
  return std::nullopt;
}

struct SerialSolve {
  CVec value;
  double work = 0.0;
  bool converged = true;
};

/// The serial computation a run converges to, at `steps` total time steps
/// and grid n: the Parareal fine propagator, or SDC on the fine level for
/// the collocation methods.
inline SerialSolve serial_equivalent(const ExperimentConfig& c, long steps,
                                     std::size_t n) {
  const Problem problem = c.problem();
  const CVec u0 = problem.initial_hat(n);
  const double tf = problem.t_final();
  auto collocation = [&](std::size_t m, double tol, int max_sweeps) {
    const Level level(problem, n, lobatto_table(m));
    auto r = sdc_run(level, u0, 0.0, tf, static_cast<int>(steps), tol, max_sweeps);
    return SerialSolve{r.value, r.cost_units, r.converged};
  };
  switch (c.method) {
    case MethodKind::serial:
      return {integrate(c.serial.scheme, problem, u0, 0.0, tf, steps),
              stepper_work(c.serial.scheme, steps, n), true};
    case MethodKind::parareal:
      return {integrate(c.parareal.fine.scheme, problem, u0, 0.0, tf, steps),
              stepper_work(c.parareal.fine.scheme, steps, n), true};
    case MethodKind::sdc: return collocation(c.sdc.nodes, c.sdc.tol, c.sdc.max_sweeps);
    case MethodKind::mlsdc:
      return collocation(c.mlsdc.nodes, c.mlsdc.tol, c.mlsdc.max_iter);
    case MethodKind::pfasst:
      return collocation(c.pfasst.m_fine, c.pfasst.tol, c.pfasst.max_iter);
  }
  return {};
}

struct MatchedCost {
  std::string method;
  bool reached = false;
  long steps = 0;
  double error = 0.0;
  double work = 0.0;
};

/// Cheapest power-of-two step count (up to max_steps) at which `scheme`
/// reaches error <= target.
inline MatchedCost matched_stepper_cost(const Problem& problem, std::size_t n,
                                        Scheme scheme, double target,
                                        const CVec& reference,
                                        long max_steps = 1L << 16) {
  MatchedCost m{to_string(scheme)};
  const CVec u0 = problem.initial_hat(n);
  for (long steps = 1; steps <= max_steps; steps *= 2) {
    double err;
    try {
      err = solution_error(integrate(scheme, problem, u0, 0.0, problem.t_final(), steps),
                           reference);
    } catch (const SingularSolve&) {
      continue;
    }
    m.steps = steps;
    m.error = err;
    m.work = stepper_work(scheme, steps, n);
    if (err <= target) {
      m.reached = true;
      return m;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// tables

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::ostringstream s;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s << ',';
        const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
        if (quote) {
          s << '"';
          for (char ch : cells[i]) s << (ch == '"' ? "\"\"" : std::string(1, ch));
          s << '"';
        } else {
          s << cells[i];
        }
      }
      s << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return s.str();
  }
};

/// Shortest round-trip representation.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int prec = 1; prec <= 17; ++prec) {
    char b[32];
    std::snprintf(b, sizeof b, "%.*g", prec, v);
    if (std::strtod(b, nullptr) == v) return b;
  }
  return buf;
}

/// JSON number, or null for non-finite values.
inline nlohmann::json json_num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// ---------------------------------------------------------------------------
// execution

struct RunOutcome {
  ExperimentConfig config;
  nlohmann::json results;
  CVec initial_value;
  CVec final_value;
  double error = std::numeric_limits<double>::quiet_NaN();
  bool converged = true;
  std::string failure;  // non-empty on numerical failure
  CsvTable convergence;
  CsvTable solution;
  std::optional<PinTResult> parareal;
  std::optional<PfasstSummary> pfasst;
  /// Speedup records (value + provenance) of this run; the claimed one first.
  std::vector<nlohmann::json> speedups;
  /// Iteration count summarizing the run (K, max k_p or total sweeps).
  int iterations = 0;
};

inline CsvTable solution_table(const CVec& u_hat, double length) {
  CsvTable t{{"x", "re", "im"}, {}};
  const CVec u = ifft(u_hat);
  const std::size_t n = u.size();
  for (std::size_t j = 0; j < n; ++j)
    t.rows.push_back({fmt_num(length * static_cast<double>(j) / static_cast<double>(n)),
                      fmt_num(u[j].real()), fmt_num(u[j].imag())});
  return t;
}

inline RunOutcome execute(const ExperimentConfig& c) {
  c.validate();
  RunOutcome out;
  out.config = c;
  const Problem problem = c.problem();
  const double tf = problem.t_final();
  const CVec u0 = problem.initial_hat(c.n);
  out.initial_value = u0;
  const CVec reference = reference_solution(problem);
  nlohmann::json& r = out.results;

  switch (c.method) {
    case MethodKind::serial: {
      out.final_value = integrate(c.serial.scheme, problem, u0, 0.0, tf, c.serial.steps);
      r["work"] = stepper_work(c.serial.scheme, c.serial.steps, c.n);
      r["cost_units"] = static_cast<double>(c.serial.steps) *
                        stepper_spec(c.serial.scheme).cost_units;
      out.convergence = {{"step_count", "work"},
                         {{std::to_string(c.serial.steps), fmt_num(r["work"].get<double>())}}};
      break;
    }
    case MethodKind::sdc:
    case MethodKind::mlsdc: {
      SerialCollocationResult s;
      if (c.method == MethodKind::sdc) {
        const Level level(problem, c.n, lobatto_table(c.sdc.nodes));
        s = sdc_run(level, u0, 0.0, tf, c.sdc.steps, c.sdc.tol, c.sdc.max_sweeps);
      } else {
        const Level fine(problem, c.n, lobatto_table(c.mlsdc.nodes));
        const Level coarse(problem, c.mlsdc.coarse_n, lobatto_table(c.mlsdc.coarse_nodes));
        s = mlsdc_run(TwoLevel(fine, coarse), u0, 0.0, tf, c.mlsdc.steps, c.mlsdc.tol,
                      c.mlsdc.max_iter);
      }
      out.final_value = s.value;
      out.converged = s.converged;
      r["iterations"] = s.iterations;
      r["work"] = s.cost_units;
      r["fine_sweeps"] = s.total_fine_sweeps;
      r["coarse_sweeps"] = s.total_coarse_sweeps;
      out.convergence.columns = {"step", "iterations"};
      for (std::size_t p = 0; p < s.iterations.size(); ++p)
        out.convergence.rows.push_back({std::to_string(p), std::to_string(s.iterations[p])});
      for (int k : s.iterations) out.iterations += k;
      if (!s.converged) out.failure = "collocation sweeps did not reach tol";
      break;
    }
    case MethodKind::parareal: {
      auto pr = parareal_run(problem, c.parareal, u0, 0.0, tf);
      out.final_value = pr.final_value();
      out.converged = pr.converged;
      out.iterations = pr.K;
      const double alpha = c.parareal.alpha();
      const PararealSpeedupInputs in{static_cast<double>(c.parareal.n_slices), alpha,
                                     static_cast<double>(pr.K)};
      const double s = parareal_theoretical_speedup(in);
      auto rec = speedup_record(s, in);
      rec["baseline"] = "serial fine propagator";
      rec["efficiency"] = parallel_efficiency(s, c.parareal.n_slices);
      rec["claimed"] = c.baseline == "fine";
      r["K"] = pr.K;
      r["converged"] = pr.converged;
      r["alpha"] = alpha;
      r["increments"] = nlohmann::json::array();
      for (double v : pr.increments) r["increments"].push_back(json_num(v));
      r["cost"] = {{"fine_cost_units", pr.fine_cost_units},
                   {"coarse_cost_units", pr.coarse_cost_units},
                   {"messages", pr.messages}};
      out.speedups.push_back(rec);
      out.convergence.columns = {"iteration", "increment"};
      for (std::size_t k = 0; k < pr.increments.size(); ++k)
        out.convergence.rows.push_back({std::to_string(k + 1), fmt_num(pr.increments[k])});
      if (!pr.converged) out.failure = "parareal did not converge";
      out.parareal = std::move(pr);
      break;
    }
    case MethodKind::pfasst: {
      PfasstConfig pc = c.pfasst;
      pc.n_fine = c.n;
      auto sum = pfasst_experiment(problem, pc, u0, 0.0, tf, pc.use_coarse);
      out.final_value = sum.result.final_value();
      out.converged = sum.result.all_converged();
      out.iterations = sum.result.max_iterations();
      r = to_json(sum);
      r.erase("error");
      auto add = [&](const std::string& base, double cost) {
        const double s = pfasst_estimate_speedup(sum.result, cost);
        nlohmann::json rec = {
            {"value", s},
            {"provenance", "model"},
            {"formula", "S = serial " + base + " work / PFASST critical-path work"},
            {"inputs", {{"baseline_work", cost}, {"critical_path", sum.result.critical_path}}},
            {"baseline", base},
            {"efficiency", parallel_efficiency(s, pc.n_steps)},
            {"claimed", c.baseline == base}};
        if (c.baseline == base)
          out.speedups.insert(out.speedups.begin(), rec);
        else
          out.speedups.push_back(rec);
      };
      add("SDC", sum.sdc.cost_units);
      if (sum.mlsdc) add("MLSDC", sum.mlsdc->cost_units);
      if (c.baseline != "SDC" && c.baseline != "MLSDC") {
        const double target = solution_error(sum.sdc.value, reference);
        const auto m = matched_stepper_cost(problem, c.n, scheme_from_string(c.baseline),
                                            target, reference);
        if (m.reached) add(c.baseline, m.work);
        r["baselines"][c.baseline] = {{"work", m.work}, {"steps", m.steps},
                                      {"error", json_num(m.error)}, {"reached", m.reached}};
      }
      out.convergence.columns = {"step", "iterations", "final_residual"};
      for (std::size_t p = 0; p < sum.result.iterations.size(); ++p) {
        const auto& h = sum.result.residuals[p];
        out.convergence.rows.push_back({std::to_string(p),
                                        std::to_string(sum.result.iterations[p]),
                                        fmt_num(h.empty() ? 0.0 : h.back())});
      }
      if (!out.converged) out.failure = "pfasst steps exhausted max_iter";
      out.pfasst = std::move(sum);
      break;
    }
  }
  out.error = solution_error(out.final_value, reference);
  r["error"] = json_num(out.error);
  r["error_norm"] = "relative max-norm at final time";
  r["reference"] = {{"n", default_reference(problem).n},
                    {"steps", default_reference(problem).steps},
                    {"scheme", to_string(default_reference(problem).scheme)}};
  if (!out.speedups.empty()) r["speedups"] = out.speedups;
  out.solution = solution_table(out.final_value, problem.length());
  if (!std::isfinite(out.error) && out.failure.empty())
    out.failure = "solution is not finite";
  return out;
}

}  // namespace pint
