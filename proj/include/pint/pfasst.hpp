#pragma once

// Two-level PFASST, emulated step by step with the pipelined dependency
// graph of a parallel run (one time step per processor).
//
// Iteration k on step p:
//   fine initial value   <- fine end value of step p-1, iteration k-1
//   restrict with FAS, coarse initial value <- coarse end of step p-1, iteration k
//   coarse sweep, interpolate the coarse correction (all nodes), fine sweep
// A step is done once its fine residual is below tol and its predecessor is
// done. The parallel cost is the critical path through this graph with
// sweep costs from Level::sweep_cost() and free communication.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pint/collocation.hpp"
#include "pint/errors.hpp"
#include "pint/problems.hpp"
#include "pint/speedup.hpp"

namespace pint {

struct PfasstConfig {
  int n_steps = 8;  // = processors
  std::size_t n_fine = 32;
  std::size_t m_fine = 5;
  std::size_t n_coarse = 8;
  std::size_t m_coarse = 5;
  bool use_coarse = true;
  double tol = 1e-10;
  int max_iter = 200;
  int predictor_sweeps = 1;
  int coarse_sweeps = 1;  // per iteration

  void validate() const {
    if (n_steps < 1) throw ConfigError("pfasst: N_P must be >= 1");
    if (!is_power_of_two(n_fine) || n_fine < 2)
      throw ConfigError("pfasst: fine grid must be a power of two >= 2");
    if (m_fine < 2) throw ConfigError("pfasst: need at least 2 fine nodes");
    if (use_coarse) {
      if (!is_power_of_two(n_coarse) || n_coarse < 2 || n_coarse > n_fine)
        throw ConfigError("pfasst: coarse grid must be a power of two <= fine grid");
      if (m_coarse < 2 || m_coarse > m_fine)
        throw ConfigError("pfasst: coarse nodes must lie in [2, m_fine]");
      if (predictor_sweeps < 0) throw ConfigError("pfasst: predictor_sweeps < 0");
      if (coarse_sweeps < 1) throw ConfigError("pfasst: coarse_sweeps must be >= 1");
    }
    if (!(tol > 0.0)) throw ConfigError("pfasst: tol must be > 0");
    if (max_iter < 1) throw ConfigError("pfasst: max_iter must be >= 1");
  }
};

struct PfasstResult {
  std::vector<CVec> step_values;   // fine end value of every step
  std::vector<int> iterations;     // k_p
  std::vector<std::vector<double>> residuals;
  std::vector<bool> converged;
  double fine_sweep_cost = 0.0;
  double coarse_sweep_cost = 0.0;
  long fine_sweeps = 0;
  long coarse_sweeps = 0;
  long messages = 0;
  double critical_path = 0.0;      // cost units

  const CVec& final_value() const { return step_values.back(); }
  int max_iterations() const {
    return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
  }
  bool all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
  }
  double total_cost() const {
    return fine_sweeps * fine_sweep_cost + coarse_sweeps * coarse_sweep_cost;
  }
};

inline PfasstResult pfasst_run(const Problem& problem, const PfasstConfig& cfg,
                               const CVec& u0_in, double t0, double t1) {
  cfg.validate();
  if (!(t1 > t0)) throw std::invalid_argument("pfasst needs t1 > t0");
  const int np = cfg.n_steps;
  const double dt = (t1 - t0) / np;
  const CVec u0 = resample_hat(u0_in, cfg.n_fine);

  const Level fine(problem, cfg.n_fine, lobatto_table(cfg.m_fine));
  std::unique_ptr<Level> coarse;
  std::unique_ptr<TwoLevel> levels;
  if (cfg.use_coarse) {
    coarse = std::make_unique<Level>(problem, cfg.n_coarse, lobatto_table(cfg.m_coarse));
    levels = std::make_unique<TwoLevel>(fine, *coarse);
  }
  const double cf = fine.sweep_cost();
  const double cc = coarse ? coarse->sweep_cost() : 0.0;

  PfasstResult r;
  r.fine_sweep_cost = cf;
  r.coarse_sweep_cost = cc;
  r.iterations.assign(np, 0);
  r.residuals.assign(np, {});
  r.converged.assign(np, false);

  std::vector<SweepState> fs(np), cs(np);
  // time at which the latest fine result of each step is available
  std::vector<double> fine_done(np, 0.0);

  // predictor: every fine step starts from the spread global initial value;
  // the coarse level marches serially and its correction is interpolated
  if (levels) {
    const CVec u0c = levels->restrict_value(u0);
    CVec uc = u0c;
    double clock = 0.0;
    for (int p = 0; p < np; ++p) {
      fs[p] = make_state(fine, u0, dt);
      cs[p] = make_state(*coarse, uc, dt);
      for (int s = 0; s < cfg.predictor_sweeps; ++s) sdc_sweep(*coarse, cs[p]);
      r.coarse_sweeps += cfg.predictor_sweeps;
      clock += cfg.predictor_sweeps * cc;
      fine_done[p] = clock;
      levels->interpolate_correction(fs[p], std::vector<CVec>(coarse->m(), u0c), cs[p]);
      uc = cs[p].u.back();
      if (p + 1 < np) ++r.messages;
    }
  } else {
    for (int p = 0; p < np; ++p) fs[p] = make_state(fine, u0, dt);
  }

  std::vector<bool> done(np, false);
  std::vector<CVec> fine_end_prev(np);  // fine end values after iteration k-1
  for (int p = 0; p < np; ++p) fine_end_prev[p] = fs[p].u.back();

  for (int k = 1; k <= cfg.max_iter; ++k) {
    if (std::all_of(done.begin(), done.end(), [](bool b) { return b; })) break;
    std::vector<double> fine_done_prev = fine_done;
    std::optional<CVec> coarse_in;  // coarse end value of step p-1, iteration k
    double coarse_in_time = 0.0;
    bool prev_done_now = true;  // predecessor done after this iteration
    for (int p = 0; p < np; ++p) {
      if (done[p]) {
        coarse_in.reset();
        coarse_in_time = fine_done[p];
        prev_done_now = true;
        continue;
      }
      // Jacobi fine initial value
      double start = fine_done_prev[p];
      const CVec& fine_u0 = p == 0 ? u0 : fine_end_prev[p - 1];
      if (p > 0) {
        start = std::max(start, fine_done_prev[p - 1]);
        ++r.messages;
      }
      set_initial_value(fine, fs[p], fine_u0);

      double t = start;
      if (levels) {
        levels->restrict_with_fas(fs[p], cs[p]);
        const std::vector<CVec> before = cs[p].u;
        if (p > 0) {
          const CVec cin = coarse_in ? *coarse_in
                                     : levels->restrict_value(fine_end_prev[p - 1]);
          set_initial_value(*coarse, cs[p], cin);
          t = std::max(t, coarse_in_time);
          ++r.messages;
        }
        for (int s = 0; s < cfg.coarse_sweeps; ++s) sdc_sweep(*coarse, cs[p]);
        r.coarse_sweeps += cfg.coarse_sweeps;
        t += cfg.coarse_sweeps * cc;
        coarse_in = cs[p].u.back();
        coarse_in_time = t;
        levels->interpolate_correction(fs[p], before, cs[p]);
      }
      sdc_sweep(fine, fs[p]);
      ++r.fine_sweeps;
      t += cf;
      fine_done[p] = t;
      r.iterations[p] = k;
      const double res = sdc_residual(fine, fs[p]);
      r.residuals[p].push_back(res);
      const bool ok = res < cfg.tol && prev_done_now;
      if (ok) {
        done[p] = true;
        r.converged[p] = true;
      }
      prev_done_now = ok;
    }
    for (int p = 0; p < np; ++p) fine_end_prev[p] = fs[p].u.back();
  }

  r.step_values.resize(np);
  for (int p = 0; p < np; ++p) r.step_values[p] = fs[p].u.back();
  r.critical_path = *std::max_element(fine_done.begin(), fine_done.end());
  return r;
}

struct SerialBaseline {
  std::string method;  // SDC or MLSDC
  double cost_units = 0.0;
  std::vector<int> iterations;
  CVec value;
  bool converged = true;
};

/// Serial SDC on the fine level with the same tolerance.
inline SerialBaseline sdc_baseline(const Problem& problem, const PfasstConfig& cfg,
                                   const CVec& u0, double t0, double t1) {
  const Level fine(problem, cfg.n_fine, lobatto_table(cfg.m_fine));
  auto r = sdc_run(fine, resample_hat(u0, cfg.n_fine), t0, t1, cfg.n_steps, cfg.tol,
                   cfg.max_iter);
  return {"SDC", r.cost_units, r.iterations, r.value, r.converged};
}

/// Serial two-level MLSDC with the PFASST hierarchy and tolerance.
inline SerialBaseline mlsdc_baseline(const Problem& problem, const PfasstConfig& cfg,
                                     const CVec& u0, double t0, double t1) {
  const Level fine(problem, cfg.n_fine, lobatto_table(cfg.m_fine));
  const Level coarse(problem, cfg.n_coarse, lobatto_table(cfg.m_coarse));
  auto r = mlsdc_run(TwoLevel(fine, coarse), resample_hat(u0, cfg.n_fine), t0, t1,
                     cfg.n_steps, cfg.tol, cfg.max_iter);
  return {"MLSDC", r.cost_units, r.iterations, r.value, r.converged};
}

/// Baseline serial cost over the parallel critical path.
inline double pfasst_estimate_speedup(const PfasstResult& result,
                                      double baseline_cost) {
  if (!(baseline_cost > 0.0)) throw std::invalid_argument("baseline cost must be > 0");
  if (!(result.critical_path > 0.0)) throw std::invalid_argument("empty schedule");
  return baseline_cost / result.critical_path;
}

struct PfasstSummary {
  PfasstConfig config;
  PfasstResult result;
  SerialBaseline sdc;
  std::optional<SerialBaseline> mlsdc;
  double speedup_vs_sdc = 0.0;
  std::optional<double> speedup_vs_mlsdc;
  std::optional<double> error;  // vs reference, when available

  double efficiency_vs_sdc() const {
    return parallel_efficiency(speedup_vs_sdc, config.n_steps);
  }
};

inline PfasstSummary pfasst_experiment(const Problem& problem, const PfasstConfig& cfg,
                                       const CVec& u0, double t0, double t1,
                                       bool with_mlsdc = true) {
  PfasstSummary s;
  s.config = cfg;
  s.result = pfasst_run(problem, cfg, u0, t0, t1);
  s.sdc = sdc_baseline(problem, cfg, u0, t0, t1);
  s.speedup_vs_sdc = pfasst_estimate_speedup(s.result, s.sdc.cost_units);
  if (with_mlsdc && cfg.use_coarse) {
    s.mlsdc = mlsdc_baseline(problem, cfg, u0, t0, t1);
    s.speedup_vs_mlsdc = pfasst_estimate_speedup(s.result, s.mlsdc->cost_units);
  }
  return s;
}

struct ToleranceRow {
  double tol;
  int iterations;  // max_p k_p
  double speedup;  // vs serial SDC at the same tol
  double error;
};

/// One PFASST run and SDC baseline per tolerance; rows sorted by tol.
inline std::vector<ToleranceRow> tolerance_sweep(const Problem& problem,
                                                 PfasstConfig cfg,
                                                 std::vector<double> tols,
                                                 const CVec& u0, double t0,
                                                 double t1, const CVec& reference) {
  if (tols.empty()) throw std::invalid_argument("tolerance list is empty");
  std::sort(tols.begin(), tols.end());
  std::vector<ToleranceRow> rows;
  for (double tol : tols) {
    cfg.tol = tol;
    const auto s = pfasst_experiment(problem, cfg, u0, t0, t1, false);
    rows.push_back({tol, s.result.max_iterations(), s.speedup_vs_sdc,
                    solution_error(s.result.final_value(), reference)});
  }
  return rows;
}

inline nlohmann::json to_json(const PfasstConfig& c) {
  return {{"n_steps", c.n_steps},       {"n_fine", c.n_fine},
          {"m_fine", c.m_fine},         {"n_coarse", c.n_coarse},
          {"m_coarse", c.m_coarse},     {"use_coarse", c.use_coarse},
          {"tol", c.tol},               {"max_iter", c.max_iter},
          {"predictor_sweeps", c.predictor_sweeps},
          {"coarse_sweeps", c.coarse_sweeps}};
}

inline nlohmann::json to_json(const PfasstSummary& s) {
  nlohmann::json j;
  j["config"] = to_json(s.config);
  j["iterations"] = s.result.iterations;
  j["converged"] = s.result.all_converged();
  j["cost"] = {{"fine_sweeps", s.result.fine_sweeps},
               {"coarse_sweeps", s.result.coarse_sweeps},
               {"fine_sweep_cost", s.result.fine_sweep_cost},
               {"coarse_sweep_cost", s.result.coarse_sweep_cost},
               {"critical_path", s.result.critical_path},
               {"messages", s.result.messages}};
  j["baselines"]["SDC"] = {{"cost_units", s.sdc.cost_units},
                           {"iterations", s.sdc.iterations}};
  j["speedup"]["vs_SDC"] = {
      {"value", s.speedup_vs_sdc},
      {"provenance", "model"},
      {"formula", "S = serial SDC cost / PFASST critical-path cost"},
      {"efficiency", s.efficiency_vs_sdc()}};
  if (s.mlsdc) {
    j["baselines"]["MLSDC"] = {{"cost_units", s.mlsdc->cost_units},
                               {"iterations", s.mlsdc->iterations}};
    j["speedup"]["vs_MLSDC"] = {
        {"value", *s.speedup_vs_mlsdc},
        {"provenance", "model"},
        {"formula", "S = serial MLSDC cost / PFASST critical-path cost"},
        {"efficiency", parallel_efficiency(*s.speedup_vs_mlsdc, s.config.n_steps)}};
  }
  if (s.error) j["error"] = *s.error;
  return j;
}

}  // namespace pint
