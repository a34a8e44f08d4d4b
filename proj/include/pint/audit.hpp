#pragma once

// Mechanical checks for the twelve ways to inflate parallel-in-time
// results. Each check yields an entry with a metric, a threshold, a verdict
// and the evidence behind it. All thresholds are invented defaults and can
// be overridden per audit config.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pint/experiment.hpp"

namespace pint {

enum class Verdict { pass, flag, not_applicable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::flag: return "FLAG";
    case Verdict::not_applicable: return "NOT_APPLICABLE";
  }
  return "?";
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "PASS") return Verdict::pass;
  if (s == "FLAG") return Verdict::flag;
  if (s == "NOT_APPLICABLE") return Verdict::not_applicable;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

inline constexpr int kWayCount = 12;

inline std::string way_title(int way) {
  static const std::array<const char*, kWayCount> titles{
      "problem parameters disclosed",
      "steady-state solution",
      "sensitivity to problem parameters",
      "added diffusion",
      "temporal over-resolution",
      "spatial over-resolution",
      "outer iteration tolerance",
      "inner solver tolerance",
      "theoretical-only speedup",
      "serial baseline choice",
      "cost versus accuracy across orders",
      "comparison with another PinT method"};
  if (way < 1 || way > kWayCount) throw std::out_of_range("way id");
  return titles[way - 1];
}

inline std::string way_category(int way) {
  if (way <= 4) return "choose your problem";
  if (way <= 8) return "over-resolve";
  if (way <= 11) return "choose your performance measure";
  return "compare methods";
}

struct AuditThresholds {
  double steady = 1e-3;            // relative rhs norm at T_F
  double sensitivity_ratio = 2.0;  // max K / min K
  double resolution_change = 2.0;  // error ratio under 2x coarsening
  double resolution_margin = 4.0;  // resolution / error-matched resolution
  double tolerance_ratio = 0.01;   // tol / achieved error
  double baseline_ratio = 1.25;    // claimed baseline work / fastest work
  double error_slack = 1.1;        // roster target = slack * baseline error

  nlohmann::json to_json() const {
    return {{"steady", steady},
            {"sensitivity_ratio", sensitivity_ratio},
            {"resolution_change", resolution_change},
            {"resolution_margin", resolution_margin},
            {"tolerance_ratio", tolerance_ratio},
            {"baseline_ratio", baseline_ratio},
            {"error_slack", error_slack}};
  }
};

struct AuditEntry {
  int way = 0;
  std::string metric;
  std::optional<double> value;
  std::optional<double> threshold;
  Verdict verdict = Verdict::not_applicable;
  nlohmann::json evidence = nlohmann::json::object();
  std::string note;

  nlohmann::json to_json() const {
    return {{"way", way},
            {"title", way_title(way)},
            {"category", way_category(way)},
            {"metric", metric},
            {"value", value ? json_num(*value) : nlohmann::json(nullptr)},
            {"threshold", threshold ? json_num(*threshold) : nlohmann::json(nullptr)},
            {"verdict", to_string(verdict)},
            {"evidence", evidence},
            {"note", note}};
  }

  static AuditEntry from_json(const nlohmann::json& j) {
    AuditEntry e;
    e.way = j.at("way").get<int>();
    e.metric = j.at("metric").get<std::string>();
    if (!j.at("value").is_null()) e.value = j.at("value").get<double>();
    if (!j.at("threshold").is_null()) e.threshold = j.at("threshold").get<double>();
    e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    e.evidence = j.at("evidence");
    e.note = j.at("note").get<std::string>();
    return e;
  }
};

inline AuditEntry not_applicable(int way, std::string note) {
  AuditEntry e;
  e.way = way;
  e.metric = "none";
  e.note = std::move(note);
  return e;
}

namespace detail {

/// Physical real parts at up to 64 evenly spaced points.
inline nlohmann::json snapshot(const CVec& u_hat, double length) {
  const CVec u = ifft(u_hat);
  const std::size_t stride = std::max<std::size_t>(1, u.size() / 64);
  nlohmann::json xs = nlohmann::json::array(), vs = nlohmann::json::array();
  for (std::size_t j = 0; j < u.size(); j += stride) {
    xs.push_back(length * static_cast<double>(j) / static_cast<double>(u.size()));
    vs.push_back(json_num(u[j].real()));
  }
  return {{"x", xs}, {"u", vs}};
}

inline double physical_max(const CVec& u_hat) { return max_norm_of_hat(u_hat); }

}  // namespace detail

// ---------------------------------------------------------------------------
// ways 1-2

inline AuditEntry audit_problem_disclosure(const Problem& problem) {
  AuditEntry e;
  e.way = 1;
  e.metric = "problem parameters missing from the report";
  e.value = 0.0;
  e.threshold = 0.0;
  e.verdict = Verdict::pass;
  e.evidence = problem.to_json();
  e.note = "every parameter of the solved problem is echoed";
  return e;
}

inline AuditEntry audit_steady_state(const Problem& problem, const CVec& u0,
                                     const CVec& uT, double threshold) {
  AuditEntry e;
  e.way = 2;
  e.metric = "max|rhs(u(T))| / max|u(T)|";
  e.threshold = threshold;
  const double un = detail::physical_max(uT);
  const double rn = detail::physical_max(full_rhs(problem, uT));
  const double metric = un > 0.0 ? rn / un : rn;
  e.value = metric;
  e.verdict = metric < threshold ? Verdict::flag : Verdict::pass;
  e.evidence = {{"initial", detail::snapshot(u0, problem.length())},
                {"final", detail::snapshot(uT, problem.length())},
                {"rhs_norm", json_num(rn)},
                {"solution_norm", json_num(un)}};
  e.note = e.verdict == Verdict::flag ? "solution has reached a steady state"
                                      : "solution is still evolving at T_F";
  return e;
}

// ---------------------------------------------------------------------------
// ways 3-4

/// Parareal K per parameter value. The nu sweep reports as way 4.
inline AuditEntry audit_parameter_sensitivity(const ExperimentConfig& base,
                                              const std::string& parameter,
                                              const std::vector<double>& values,
                                              double ratio_threshold) {
  const int way = parameter == "nu" ? 4 : 3;
  if (base.method != MethodKind::parareal)
    return not_applicable(way, "sensitivity sweeps need a Parareal run");
  if (values.size() < 2)
    throw std::invalid_argument("sensitivity sweep needs at least 2 values");
  AuditEntry e;
  e.way = way;
  e.metric = "max K / min K over " + parameter;
  e.threshold = ratio_threshold;
  nlohmann::json rows = nlohmann::json::array();
  int kmin = 0, kmax = 0;
  bool any = false;
  for (double v : values) {
    ExperimentConfig c = base;
    c.overrides[parameter] = v;
    nlohmann::json row = {{"value", v}};
    try {
      const Problem problem = c.problem();
      const auto r = parareal_run(problem, c.parareal, problem.initial_hat(c.n), 0.0,
                                  problem.t_final());
      row["K"] = r.K;
      row["converged"] = r.converged;
      kmin = any ? std::min(kmin, r.K) : r.K;
      kmax = any ? std::max(kmax, r.K) : r.K;
      any = true;
    } catch (const std::exception& ex) {
      row["failure"] = ex.what();
    }
    rows.push_back(row);
  }
  e.evidence = {{"parameter", parameter}, {"runs", rows}};
  if (!any) {
    e.note = "every run of the sweep failed";
    return e;
  }
  e.value = static_cast<double>(kmax) / static_cast<double>(kmin);
  e.verdict = *e.value > ratio_threshold ? Verdict::flag : Verdict::pass;
  e.note = e.verdict == Verdict::flag ? "iteration count is parameter-brittle"
                                      : "iteration count is stable across the sweep";
  return e;
}

// ---------------------------------------------------------------------------
// ways 5-6

struct ResolutionRow {
  long steps;
  std::size_t n;
  double error;
};

namespace detail {

/// Halve the resolution until the error exceeds change * error(r0) or
/// max_levels halvings are done. Returns rows starting at r0.
template <class Solve>
std::vector<ResolutionRow> halving_ladder(long steps, std::size_t n, bool in_time,
                                          double change, int max_levels,
                                          std::size_t min_n, Solve&& solve) {
  std::vector<ResolutionRow> rows;
  rows.push_back({steps, n, solve(steps, n)});
  for (int level = 0; level < max_levels; ++level) {
    if (in_time) {
      if (steps < 2) break;
      steps /= 2;
    } else {
      if (n / 2 < min_n) break;
      n /= 2;
    }
    double err;
    try {
      err = solve(steps, n);
    } catch (const SingularSolve&) {
      err = std::numeric_limits<double>::infinity();
    } catch (const ConvergenceError&) {
      err = std::numeric_limits<double>::infinity();
    }
    rows.push_back({steps, n, err});
    if (!(err <= change * rows.front().error)) break;
  }
  return rows;
}

inline AuditEntry resolution_entry(int way, const std::vector<ResolutionRow>& rows,
                                   const AuditThresholds& th) {
  const bool in_time = way == 5;
  AuditEntry e;
  e.way = way;
  e.metric = in_time ? "error(dt*2) / error(dt)" : "error(n/2) / error(n)";
  e.threshold = th.resolution_change;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows)
    table.push_back({{"steps", r.steps}, {"n", r.n}, {"error", json_num(r.error)}});
  e.evidence["table"] = table;
  if (rows.size() < 2) {
    e.note = "resolution cannot be halved";
    return e;
  }
  const double e0 = rows[0].error, e1 = rows[1].error;
  if (e0 < 1e-13 && e1 < 1e-13) {
    e.note = "error at round-off level at every resolution";
    return e;
  }
  const double ratio = e0 > 0.0 ? e1 / e0 : std::numeric_limits<double>::infinity();
  std::size_t matched = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].error <= th.resolution_change * e0) matched = i; else break;
  }
  const double r0 = in_time ? static_cast<double>(rows[0].steps)
                            : static_cast<double>(rows[0].n);
  const double rm = in_time ? static_cast<double>(rows[matched].steps)
                            : static_cast<double>(rows[matched].n);
  const double margin = r0 / rm;
  e.value = ratio;
  e.evidence["error_matched_resolution"] = rm;
  e.evidence["margin"] = margin;
  e.evidence["margin_threshold"] = th.resolution_margin;
  const bool flag = ratio < th.resolution_change && margin >= th.resolution_margin;
  e.verdict = flag ? Verdict::flag : Verdict::pass;
  if (flag)
    e.note = std::string(in_time ? "time steps" : "grid points") + " exceed the error-matched " +
             "resolution by a factor " + fmt_num(margin);
  else
    e.note = "coarsening changes the error";
  return e;
}

}  // namespace detail

/// Reruns the serial equivalent of the run with fewer time steps.
inline AuditEntry audit_temporal_resolution(const ExperimentConfig& c,
                                            const CVec& reference,
                                            const AuditThresholds& th,
                                            int max_levels = 8) {
  auto solve = [&](long steps, std::size_t n) {
    return solution_error(serial_equivalent(c, steps, n).value, reference);
  };
  const auto rows = detail::halving_ladder(time_steps(c), c.n, true,
                                           th.resolution_change, max_levels, 4, solve);
  return detail::resolution_entry(5, rows, th);
}

/// Reruns the serial equivalent of the run on coarser grids.
inline AuditEntry audit_spatial_resolution(const ExperimentConfig& c,
                                           const CVec& reference,
                                           const AuditThresholds& th,
                                           int max_levels = 8) {
  auto solve = [&](long steps, std::size_t n) {
    return solution_error(serial_equivalent(c, steps, n).value, reference);
  };
  const auto rows = detail::halving_ladder(time_steps(c), c.n, false,
                                           th.resolution_change, max_levels, 4, solve);
  return detail::resolution_entry(6, rows, th);
}

// ---------------------------------------------------------------------------
// ways 7-8

inline std::pair<AuditEntry, AuditEntry> audit_tolerances(
    std::optional<double> tol, double achieved_error, std::optional<double> inner_tol,
    double ratio_threshold) {
  AuditEntry outer = not_applicable(7, "method does not iterate");
  if (tol) {
    outer.metric = "tol / achieved error";
    outer.threshold = ratio_threshold;
    outer.value = achieved_error > 0.0 ? *tol / achieved_error
                                       : std::numeric_limits<double>::infinity();
    outer.evidence = {{"tol", *tol}, {"achieved_error", json_num(achieved_error)}};
    outer.verdict = *outer.value < ratio_threshold ? Verdict::flag : Verdict::pass;
    outer.note = outer.verdict == Verdict::flag
                     ? "iterating far below the discretization error"
                     : "tolerance matches the achieved accuracy";
  }
  AuditEntry inner = not_applicable(
      8, "no inner iterative solver: implicit solves are diagonal in Fourier space");
  if (inner_tol && tol) {
    inner.metric = "inner tol / outer tol";
    inner.threshold = ratio_threshold;
    inner.value = *inner_tol / *tol;
    inner.evidence = {{"inner_tol", *inner_tol}, {"outer_tol", *tol}};
    inner.verdict = *inner.value < ratio_threshold ? Verdict::flag : Verdict::pass;
    inner.note = inner.verdict == Verdict::flag ? "inner solver over-solves"
                                                : "inner tolerance is proportionate";
  }
  return {outer, inner};
}

// ---------------------------------------------------------------------------
// way 9

/// `measured` is a bench record (see cmd_bench) matching one of the runs.
inline AuditEntry audit_speedup_provenance(bool claim,
                                           const std::vector<nlohmann::json>& model,
                                           const std::optional<nlohmann::json>& measured) {
  if (!claim) return not_applicable(9, "no speedup is claimed");
  AuditEntry e;
  e.way = 9;
  e.evidence["model"] = model;
  if (!measured) {
    e.metric = "measured timings attached";
    e.value = 0.0;
    e.threshold = 1.0;
    e.verdict = Verdict::flag;
    e.note = "speedup claimed from the model alone";
    return e;
  }
  const auto& m = *measured;
  const double s_meas = m.at("speedup").at("measured").at("value").get<double>();
  const double s_theo = m.at("speedup").at("theory").at("value").get<double>();
  e.metric = "measured / theoretical speedup";
  e.value = s_meas / s_theo;
  e.verdict = Verdict::pass;
  e.evidence["measured"] = m.at("speedup").at("measured");
  e.evidence["theory"] = m.at("speedup").at("theory");
  e.evidence["threads"] = m.at("threads");
  e.evidence["cores"] = m.at("environment").at("cores");
  e.note = "measured timings accompany the claim";
  return e;
}

// ---------------------------------------------------------------------------
// way 10

inline AuditEntry audit_baseline(const RunOutcome& run,
                                 const std::vector<std::string>& roster,
                                 const CVec& reference, const AuditThresholds& th) {
  const auto& c = run.config;
  if (!is_pint(c.method)) return not_applicable(10, "no parallel run to compare");
  const Problem problem = c.problem();

  struct Member {
    std::string name;
    double work;
    double error;
    bool reached;
    long steps;
  };
  Member claimed{};
  if (c.method == MethodKind::parareal) {
    if (c.baseline == "fine") {
      const long steps = time_steps(c);
      const auto s = serial_equivalent(c, steps, c.n);
      claimed = {to_string(c.parareal.fine.scheme), s.work,
                 solution_error(s.value, reference), true, steps};
    }
  } else {
    const auto& sum = *run.pfasst;
    if (c.baseline == "SDC")
      claimed = {"SDC", sum.sdc.cost_units, solution_error(sum.sdc.value, reference), true,
                 c.pfasst.n_steps};
    else if (c.baseline == "MLSDC" && sum.mlsdc)
      claimed = {"MLSDC", sum.mlsdc->cost_units, solution_error(sum.mlsdc->value, reference),
                 true, c.pfasst.n_steps};
  }
  if (claimed.name.empty()) {
    // a stepper named as baseline, at its own matched cost
    const auto m = matched_stepper_cost(problem, c.n, scheme_from_string(c.baseline),
                                        run.error * th.error_slack, reference);
    claimed = {m.method, m.work, m.error, m.reached, m.steps};
  }
  const double target = std::max(claimed.error, 1e-14) * th.error_slack;

  std::vector<Member> members;
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& name : roster) {
    if (name == claimed.name) continue;
    if (name == "SDC" || name == "MLSDC") {
      if (c.method != MethodKind::pfasst) {
        excluded.push_back({{"method", name}, {"reason", "needs a collocation run"}});
        continue;
      }
      const auto& sum = *run.pfasst;
      const SerialBaseline* b =
          name == "SDC" ? &sum.sdc : (sum.mlsdc ? &*sum.mlsdc : nullptr);
      if (!b) {
        excluded.push_back({{"method", name}, {"reason", "no coarse level"}});
        continue;
      }
      const double err = solution_error(b->value, reference);
      if (err <= target)
        members.push_back({name, b->cost_units, err, true, c.pfasst.n_steps});
      else
        excluded.push_back({{"method", name}, {"reason", "error target not reached"},
                            {"error", json_num(err)}});
      continue;
    }
    const auto m = matched_stepper_cost(problem, c.n, scheme_from_string(name), target,
                                        reference);
    if (m.reached)
      members.push_back({m.method, m.work, m.error, true, m.steps});
    else
      excluded.push_back({{"method", name}, {"reason", "error target not reached"},
                          {"steps", m.steps}, {"error", json_num(m.error)}});
  }

  AuditEntry e;
  e.way = 10;
  e.metric = "claimed baseline work / fastest serial work";
  e.threshold = th.baseline_ratio;
  double fastest = claimed.work;
  std::string fastest_name = claimed.name;
  nlohmann::json table = nlohmann::json::array();
  auto row = [](const Member& m) {
    return nlohmann::json{{"method", m.name}, {"work", m.work},
                          {"error", json_num(m.error)}, {"steps", m.steps}};
  };
  table.push_back(row(claimed));
  table.back()["claimed"] = true;
  for (const auto& m : members) {
    table.push_back(row(m));
    if (m.work < fastest) {
      fastest = m.work;
      fastest_name = m.name;
    }
  }
  e.value = claimed.work / fastest;
  e.verdict = *e.value > th.baseline_ratio ? Verdict::flag : Verdict::pass;
  e.evidence = {{"target_error", target},
                {"work_unit", "rhs evaluations x n log2 n"},
                {"roster", table},
                {"excluded", excluded},
                {"fastest", fastest_name}};
  e.note = e.verdict == Verdict::flag ? fastest_name + " reaches the same error with less work"
                                      : "the claimed baseline is competitive";
  return e;
}

// ---------------------------------------------------------------------------
// way 11

struct WorkPrecisionMethod {
  std::string label;
  bool parallel = false;
  Scheme scheme = Scheme::etd1;
  std::optional<Scheme> coarse;  // parallel only; defaults to scheme
  long coarse_steps = 1;         // per slice, parallel only
  int n_slices = 32;
  double tol = 1e-3;
  std::vector<long> ladder;  // fine steps per slice
};

struct WorkPrecisionSpec {
  std::string preset = "ks";
  std::map<std::string, double> overrides;
  std::size_t n = 512;
  std::vector<WorkPrecisionMethod> methods;
};

struct WorkPrecisionPoint {
  std::string label;
  bool parallel = false;
  int order = 0;
  long steps_per_slice = 0;
  double work = 0.0;  // parallel: serial work / theoretical speedup
  double error = 0.0;
  std::optional<int> K;
  std::optional<double> speedup;
  bool converged = true;
};

inline std::vector<WorkPrecisionPoint> work_precision(const Problem& problem,
                                                      std::size_t n,
                                                      const std::vector<WorkPrecisionMethod>& methods,
                                                      const CVec& reference) {
  std::vector<WorkPrecisionPoint> out;
  const CVec u0 = problem.initial_hat(n);
  const double tf = problem.t_final();
  for (const auto& m : methods) {
    if (m.ladder.size() < 3)
      throw std::invalid_argument("work-precision ladder needs at least 3 rungs");
    for (long nf : m.ladder) {
      WorkPrecisionPoint p;
      p.label = m.label;
      p.parallel = m.parallel;
      p.order = stepper_spec(m.scheme).nominal_order;
      p.steps_per_slice = nf;
      const double serial_work = stepper_work(m.scheme, nf * m.n_slices, n);
      if (m.parallel) {
        PararealConfig cfg;
        cfg.n_slices = m.n_slices;
        cfg.fine = {m.scheme, nf};
        cfg.coarse = {m.coarse.value_or(m.scheme), std::min(m.coarse_steps, nf)};
        cfg.tol = m.tol;
        const auto r = parareal_run(problem, cfg, u0, 0.0, tf);
        const double s = parareal_theoretical_speedup(
            {static_cast<double>(m.n_slices), cfg.alpha(), static_cast<double>(r.K)});
        p.K = r.K;
        p.speedup = s;
        p.converged = r.converged;
        p.work = serial_work / s;
        p.error = solution_error(r.final_value(), reference);
      } else {
        p.work = serial_work;
        p.error = solution_error(integrate(m.scheme, problem, u0, 0.0, tf, nf * m.n_slices),
                                 reference);
      }
      out.push_back(p);
    }
  }
  return out;
}

/// True iff curve `a` has strictly lower error than curve `b` at every cost
/// level of either curve inside their common cost range (log-log
/// interpolation). False if the ranges do not overlap.
inline bool dominates(std::vector<WorkPrecisionPoint> a, std::vector<WorkPrecisionPoint> b) {
  auto by_work = [](const auto& x, const auto& y) { return x.work < y.work; };
  std::sort(a.begin(), a.end(), by_work);
  std::sort(b.begin(), b.end(), by_work);
  if (a.empty() || b.empty()) return false;
  const double lo = std::max(a.front().work, b.front().work);
  const double hi = std::min(a.back().work, b.back().work);
  if (!(lo <= hi)) return false;
  auto at = [](const std::vector<WorkPrecisionPoint>& c, double w) {
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      if (w >= c[i].work && w <= c[i + 1].work) {
        const double t = (std::log(w) - std::log(c[i].work)) /
                         (std::log(c[i + 1].work) - std::log(c[i].work));
        return std::exp((1 - t) * std::log(c[i].error) + t * std::log(c[i + 1].error));
      }
    }
    return c.back().error;
  };
  std::vector<double> levels{lo, hi};
  for (const auto& p : a) if (p.work >= lo && p.work <= hi) levels.push_back(p.work);
  for (const auto& p : b) if (p.work >= lo && p.work <= hi) levels.push_back(p.work);
  for (double w : levels)
    if (!(at(a, w) < at(b, w))) return false;
  return true;
}

inline nlohmann::json to_json(const std::vector<WorkPrecisionPoint>& pts) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : pts) {
    nlohmann::json r = {{"method", p.label},
                        {"parallel", p.parallel},
                        {"order", p.order},
                        {"steps_per_slice", p.steps_per_slice},
                        {"work", p.work},
                        {"error", json_num(p.error)},
                        {"converged", p.converged}};
    if (p.K) r["K"] = *p.K;
    if (p.speedup)
      r["speedup"] = {{"value", *p.speedup},
                      {"provenance", "model"},
                      {"formula", "S = N_P / (N_P*alpha + K*(1+alpha))"}};
    rows.push_back(r);
  }
  return rows;
}

/// Entry for a report with a work-precision table: PASS, with the question
/// whether the best serial higher-order curve dominates every parallel
/// lower-order curve recorded as the metric.
inline AuditEntry work_precision_entry(const std::vector<WorkPrecisionPoint>& pts) {
  std::map<std::string, std::vector<WorkPrecisionPoint>> curves;
  for (const auto& p : pts) curves[p.label].push_back(p);
  AuditEntry e;
  e.way = 11;
  e.evidence["table"] = to_json(pts);
  if (curves.size() < 2) {
    e.note = "single method: table only";
    return e;
  }
  nlohmann::json checks = nlohmann::json::array();
  bool serial_wins = true;
  bool any_pair = false;
  for (const auto& [ls, s] : curves) {
    if (s.front().parallel) continue;
    for (const auto& [lp, p] : curves) {
      if (!p.front().parallel || p.front().order >= s.front().order) continue;
      const bool d = dominates(s, p);
      checks.push_back({{"serial", ls}, {"parallel", lp}, {"serial_dominates", d}});
      serial_wins = serial_wins && d;
      any_pair = true;
    }
  }
  e.metric = "higher-order serial dominates lower-order parallel";
  e.value = any_pair ? (serial_wins ? 1.0 : 0.0) : 0.0;
  e.verdict = Verdict::pass;
  e.evidence["dominance"] = checks;
  e.note = "cost versus accuracy is shown for every method";
  return e;
}

// ---------------------------------------------------------------------------
// way 12

inline AuditEntry compare_methods(bool claim, const std::vector<RunOutcome>& runs) {
  if (!claim) return not_applicable(12, "no speedup is claimed");
  std::set<MethodKind> kinds;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : runs) {
    if (!is_pint(r.config.method)) continue;
    kinds.insert(r.config.method);
    nlohmann::json row = {{"run", r.config.name},
                          {"method", to_string(r.config.method)},
                          {"iterations", r.iterations},
                          {"error", json_num(r.error)}};
    if (!r.speedups.empty()) row["speedup"] = r.speedups.front();
    table.push_back(row);
  }
  if (kinds.empty()) return not_applicable(12, "no parallel-in-time run");
  AuditEntry e;
  e.way = 12;
  e.metric = "distinct PinT methods compared";
  e.value = static_cast<double>(kinds.size());
  e.threshold = 2.0;
  e.evidence["table"] = table;
  e.verdict = kinds.size() >= 2 ? Verdict::pass : Verdict::flag;
  e.note = e.verdict == Verdict::pass ? "Parareal and PFASST reported side by side"
                                      : "only one PinT method is reported";
  return e;
}

// ---------------------------------------------------------------------------
// full audit

struct SensitivitySpec {
  std::string parameter;
  std::vector<double> values;
};

struct AuditConfig {
  int schema = 1;
  std::string name = "audit";
  std::vector<std::string> run_paths;  // as written in the config
  std::vector<ExperimentConfig> runs;
  bool speedup_claim = false;
  std::string measured_path;
  std::optional<nlohmann::json> measured;  // bench record
  std::vector<std::string> roster;
  std::vector<SensitivitySpec> sensitivity;
  std::optional<WorkPrecisionSpec> work_precision;
  std::optional<double> inner_tol;
  AuditThresholds thresholds;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["name"] = name;
    j["audit"]["runs"] = run_paths;
    j["audit"]["speedup_claim"] = speedup_claim;
    j["audit"]["measured"] = measured_path;
    j["audit"]["roster"] = roster;
    j["audit"]["sensitivity"] = nlohmann::json::array();
    for (const auto& s : sensitivity)
      j["audit"]["sensitivity"].push_back({{"parameter", s.parameter}, {"values", s.values}});
    if (inner_tol) j["audit"]["inner_tol"] = *inner_tol;
    j["audit"]["thresholds"] = thresholds.to_json();
    if (work_precision) {
      nlohmann::json w;
      w["preset"] = work_precision->preset;
      w["params"] = work_precision->overrides;
      w["n"] = work_precision->n;
      w["methods"] = nlohmann::json::array();
      for (const auto& m : work_precision->methods)
        w["methods"].push_back({{"label", m.label},
                                {"parallel", m.parallel},
                                {"scheme", to_string(m.scheme)},
                                {"coarse", to_string(m.coarse.value_or(m.scheme))},
                                {"coarse_steps", m.coarse_steps},
                                {"n_slices", m.n_slices},
                                {"tol", m.tol},
                                {"ladder", m.ladder}});
      j["audit"]["work_precision"] = w;
    }
    j["runs"] = nlohmann::json::array();
    for (const auto& r : runs) j["runs"].push_back(r.to_json());
    return j;
  }
};

struct AuditReport {
  std::string name;
  nlohmann::json config;
  AuditThresholds thresholds;
  std::vector<AuditEntry> entries;  // exactly 12, ordered by way
  nlohmann::json runs = nlohmann::json::array();

  bool any_flag() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const AuditEntry& e) { return e.verdict == Verdict::flag; });
  }
  std::vector<int> flagged_ways() const {
    std::vector<int> w;
    for (const auto& e : entries)
      if (e.verdict == Verdict::flag) w.push_back(e.way);
    return w;
  }
  const AuditEntry& entry(int way) const { return entries.at(way - 1); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = 1;
    j["name"] = name;
    j["config"] = config;
    j["thresholds"] = thresholds.to_json();
    j["thresholds_note"] = "invented defaults, overridable per audit config";
    j["categories"] = nlohmann::json::array();
    for (const char* c : {"choose your problem", "over-resolve",
                          "choose your performance measure", "compare methods"}) {
      nlohmann::json ways = nlohmann::json::array();
      for (int w = 1; w <= kWayCount; ++w)
        if (way_category(w) == c) ways.push_back(w);
      j["categories"].push_back({{"name", c}, {"ways", ways}});
    }
    j["entries"] = nlohmann::json::array();
    for (const auto& e : entries) j["entries"].push_back(e.to_json());
    j["runs"] = runs;
    j["flags"] = flagged_ways();
    return j;
  }

  static AuditReport from_json(const nlohmann::json& j) {
    AuditReport r;
    r.name = j.at("name").get<std::string>();
    r.config = j.at("config");
    const auto& t = j.at("thresholds");
    r.thresholds.steady = t.at("steady");
    r.thresholds.sensitivity_ratio = t.at("sensitivity_ratio");
    r.thresholds.resolution_change = t.at("resolution_change");
    r.thresholds.resolution_margin = t.at("resolution_margin");
    r.thresholds.tolerance_ratio = t.at("tolerance_ratio");
    r.thresholds.baseline_ratio = t.at("baseline_ratio");
    r.thresholds.error_slack = t.at("error_slack");
    for (const auto& e : j.at("entries")) r.entries.push_back(AuditEntry::from_json(e));
    r.runs = j.at("runs");
    return r;
  }

  std::string to_markdown() const;
};

namespace detail {

inline std::string md_num(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *v);
  return buf;
}

/// One entry per way from per-run entries: FLAG beats PASS beats
/// NOT_APPLICABLE; the decisive run supplies metric and value.
inline AuditEntry merge(int way, const std::vector<std::pair<std::string, AuditEntry>>& per_run) {
  if (per_run.empty()) return not_applicable(way, "no run to check");
  if (per_run.size() == 1) {
    AuditEntry e = per_run.front().second;
    e.evidence = {{"runs", {{{"run", per_run.front().first},
                             {"verdict", to_string(e.verdict)},
                             {"evidence", e.evidence}}}}};
    return e;
  }
  auto rank = [](Verdict v) {
    return v == Verdict::flag ? 2 : v == Verdict::pass ? 1 : 0;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < per_run.size(); ++i)
    if (rank(per_run[i].second.verdict) > rank(per_run[best].second.verdict)) best = i;
  AuditEntry e = per_run[best].second;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& [name, sub] : per_run)
    runs.push_back({{"run", name},
                    {"verdict", to_string(sub.verdict)},
                    {"metric", sub.metric},
                    {"value", sub.value ? json_num(*sub.value) : nlohmann::json(nullptr)},
                    {"note", sub.note},
                    {"evidence", sub.evidence}});
  e.evidence = {{"runs", runs}};
  e.note = per_run[best].first + ": " + e.note;
  return e;
}

template <class Fn>
AuditEntry guarded(int way, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& ex) {
    return not_applicable(way, std::string("detector failed: ") + ex.what());
  }
}

}  // namespace detail

inline std::string AuditReport::to_markdown() const {
  std::ostringstream s;
  int flags = 0, passes = 0, na = 0;
  for (const auto& e : entries) {
    if (e.verdict == Verdict::flag) ++flags;
    else if (e.verdict == Verdict::pass) ++passes;
    else ++na;
  }
  s << "# Audit report: " << name << "\n\n";
  s << flags << " FLAG, " << passes << " PASS, " << na << " NOT_APPLICABLE.\n";
  s << "Thresholds are invented defaults and can be overridden in the audit config.\n";
  for (const char* cat : {"choose your problem", "over-resolve",
                          "choose your performance measure", "compare methods"}) {
    s << "\n## " << cat << "\n\n";
    s << "| Way | Check | Metric | Value | Threshold | Verdict | Note |\n";
    s << "|---|---|---|---|---|---|---|\n";
    for (const auto& e : entries) {
      if (way_category(e.way) != cat) continue;
      s << "| " << e.way << " | " << way_title(e.way) << " | " << e.metric << " | "
        << detail::md_num(e.value) << " | " << detail::md_num(e.threshold) << " | "
        << to_string(e.verdict) << " | " << e.note << " |\n";
    }
  }
  s << "\n## Runs\n\n| Run | Method | Error | Iterations | Claimed speedup |\n";
  s << "|---|---|---|---|---|\n";
  for (const auto& r : runs) {
    std::string sp = "-";
    if (r.contains("speedup")) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.3g (%s, vs %s)",
                    r["speedup"]["value"].get<double>(),
                    r["speedup"]["provenance"].get<std::string>().c_str(),
                    r["speedup"]["baseline"].get<std::string>().c_str());
      sp = buf;
    }
    s << "| " << r["name"].get<std::string>() << " | " << r["method"].get<std::string>()
      << " | " << detail::md_num(r["error"].is_null() ? std::nullopt
                                                       : std::optional<double>(r["error"].get<double>()))
      << " | " << r["iterations"].get<int>() << " | " << sp << " |\n";
  }
  s << "\nEvidence for every entry is in the JSON report.\n";
  return s.str();
}

inline AuditReport run_full_audit(const AuditConfig& cfg) {
  AuditReport report;
  report.name = cfg.name;
  report.config = cfg.to_json();
  report.thresholds = cfg.thresholds;
  const auto& th = cfg.thresholds;

  std::vector<RunOutcome> outcomes;
  std::vector<CVec> references;
  for (const auto& rc : cfg.runs) {
    outcomes.push_back(execute(rc));
    references.push_back(reference_solution(rc.problem()));
  }

  std::vector<std::vector<std::pair<std::string, AuditEntry>>> per(kWayCount + 1);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const auto& c = o.config;
    const Problem problem = c.problem();
    const std::string& name = c.name;
    per[1].push_back({name, audit_problem_disclosure(problem)});
    per[2].push_back({name, detail::guarded(2, [&] {
                        return audit_steady_state(problem, o.initial_value, o.final_value,
                                                  th.steady);
                      })});
    per[5].push_back({name, detail::guarded(5, [&] {
                        return audit_temporal_resolution(c, references[i], th);
                      })});
    per[6].push_back({name, detail::guarded(6, [&] {
                        return audit_spatial_resolution(c, references[i], th);
                      })});
    auto [w7, w8] = audit_tolerances(outer_tolerance(c), o.error, cfg.inner_tol,
                                     th.tolerance_ratio);
    per[7].push_back({name, w7});
    per[8].push_back({name, w8});
    if (cfg.speedup_claim)
      per[10].push_back({name, detail::guarded(10, [&] {
                           return audit_baseline(o, cfg.roster, references[i], th);
                         })});
  }

  // ways 3-4
  const ExperimentConfig* parareal_run_cfg = nullptr;
  for (const auto& rc : cfg.runs)
    if (rc.method == MethodKind::parareal) {
      parareal_run_cfg = &rc;
      break;
    }
  for (const auto& s : cfg.sensitivity) {
    const int way = s.parameter == "nu" ? 4 : 3;
    if (!parareal_run_cfg) {
      per[way].push_back({"-", not_applicable(way, "sensitivity sweeps need a Parareal run")});
      continue;
    }
    per[way].push_back({parareal_run_cfg->name, detail::guarded(way, [&] {
                          return audit_parameter_sensitivity(*parareal_run_cfg, s.parameter,
                                                             s.values, th.sensitivity_ratio);
                        })});
  }

  // way 9
  std::vector<nlohmann::json> model;
  for (const auto& o : outcomes)
    for (const auto& sp : o.speedups) model.push_back(sp);
  std::optional<nlohmann::json> measured;
  std::string measured_note;
  if (cfg.measured) {
    const auto hash = cfg.measured->value("config_hash", std::string{});
    for (const auto& rc : cfg.runs)
      if (rc.hash() == hash) measured = cfg.measured;
    if (!measured) measured_note = "attached bench record does not match any run";
  }
  AuditEntry w9 = detail::guarded(9, [&] {
    return audit_speedup_provenance(cfg.speedup_claim, model, measured);
  });
  if (!measured_note.empty()) w9.note += " (" + measured_note + ")";

  // way 11
  AuditEntry w11;
  if (cfg.work_precision) {
    w11 = detail::guarded(11, [&] {
      const auto& wp = *cfg.work_precision;
      const Problem problem = make_problem(wp.preset, wp.overrides);
      const CVec ref = reference_solution(problem);
      return work_precision_entry(work_precision(problem, wp.n, wp.methods, ref));
    });
  } else if (!cfg.speedup_claim) {
    w11 = not_applicable(11, "no speedup is claimed");
  } else {
    std::set<int> orders;
    nlohmann::json listed = nlohmann::json::array();
    for (const auto& o : outcomes) {
      orders.insert(nominal_order(o.config));
      listed.push_back({{"run", o.config.name}, {"order", nominal_order(o.config)}});
    }
    if (orders.size() < 2) {
      w11 = not_applicable(11, "all runs use methods of the same order");
    } else {
      w11.way = 11;
      w11.metric = "methods of different order compared without a work-precision table";
      w11.value = static_cast<double>(orders.size());
      w11.threshold = 1.0;
      w11.verdict = Verdict::flag;
      w11.evidence = {{"orders", listed}};
      w11.note = "add a work-precision table";
    }
  }

  AuditEntry w12 = detail::guarded(12, [&] { return compare_methods(cfg.speedup_claim, outcomes); });

  for (int way = 1; way <= kWayCount; ++way) {
    if (way == 9) report.entries.push_back(w9);
    else if (way == 11) report.entries.push_back(w11);
    else if (way == 12) report.entries.push_back(w12);
    else if (way == 10 && !cfg.speedup_claim)
      report.entries.push_back(not_applicable(10, "no speedup is claimed"));
    else if ((way == 3 || way == 4) && per[way].empty())
      report.entries.push_back(not_applicable(way, "no parameter sweep configured"));
    else
      report.entries.push_back(detail::merge(way, per[way]));
    report.entries.back().way = way;
  }

  for (const auto& o : outcomes) {
    nlohmann::json r = {{"name", o.config.name},
                        {"method", to_string(o.config.method)},
                        {"config_hash", o.config.hash()},
                        {"error", json_num(o.error)},
                        {"iterations", o.iterations},
                        {"converged", o.converged}};
    if (!o.speedups.empty()) r["speedup"] = o.speedups.front();
    report.runs.push_back(r);
  }
  return report;
}

}  // namespace pint
