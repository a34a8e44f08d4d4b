#include <catch_amalgamated.hpp>

#include <cmath>

#include "pint/pfasst.hpp"
#include "pint/reference.hpp"

using namespace pint;

namespace {

PfasstConfig nls_config(std::size_t n_fine, std::size_t n_coarse) {
  PfasstConfig c;
  c.n_steps = 8;
  c.n_fine = n_fine;
  c.n_coarse = n_coarse;
  c.m_fine = 5;
  c.m_coarse = 5;
  c.tol = 1e-10;
  return c;
}

}  // namespace

TEST_CASE("configuration validation", "[pfasst]") {
  PfasstConfig c;
  c.n_coarse = 64;
  c.n_fine = 32;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.m_coarse = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.use_coarse = false;
  c.n_coarse = 1024;  // ignored without a coarse level
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("one processor without a coarse level is plain SDC", "[pfasst]") {
  const Problem p = named_problem("nls");
  PfasstConfig c = nls_config(32, 8);
  c.n_steps = 1;
  c.use_coarse = false;
  const CVec u0 = p.initial_hat(32);
  const double dt = p.t_final() / 8;
  const auto r = pfasst_run(p, c, u0, 0.0, dt);
  const auto s = sdc_solve_step(Level(p, 32, lobatto_table(5)), u0, dt, c.tol, c.max_iter);
  CHECK(r.iterations[0] == s.iterations);
  CHECK(r.final_value() == s.value);
  const auto base = sdc_baseline(p, c, u0, 0.0, dt);
  CHECK(std::abs(pfasst_estimate_speedup(r, base.cost_units) - 1.0) < 0.05);
}

TEST_CASE("pipeline of trivially converging steps", "[pfasst]") {
  // F == 0: every step converges after its first sweep, so two processors
  // finish in one sweep what the serial run needs two sweeps for
  LinearParams lp;
  lp.lambda_i = 0.0;
  lp.lambda_e = 0.0;
  const Problem p("zero", lp);
  PfasstConfig c = nls_config(8, 8);
  c.n_steps = 2;
  c.use_coarse = false;
  const CVec u0 = p.initial_hat(8);
  const auto s = pfasst_experiment(p, c, u0, 0.0, 1.0, false);
  CHECK(s.result.iterations == std::vector<int>{1, 1});
  CHECK(s.result.critical_path == s.result.fine_sweep_cost);
  CHECK(std::abs(s.speedup_vs_sdc - 2.0) < 1e-12);
  CHECK(s.result.final_value() == u0);
}

TEST_CASE("dependency schedule on a scalar problem", "[pfasst]") {
  // two steps, no coarse level: step 1 restarts every iteration from the
  // previous iterate of step 0, which is what this oracle replays
  LinearParams lp;
  lp.lambda_i = -1.0;
  lp.lambda_e = 0.5;
  const Problem p("scalar", lp);
  PfasstConfig c = nls_config(2, 2);
  c.n_steps = 2;
  c.m_fine = 3;
  c.use_coarse = false;
  c.tol = 1e-13;
  const CVec u0{2.0, 0.0};
  const auto r = pfasst_run(p, c, u0, 0.0, 1.0);

  const Level level(p, 2, lobatto_table(3));
  SweepState a = make_state(level, u0, 0.5), b = make_state(level, u0, 0.5);
  bool a_done = false, b_done = false;
  for (int k = 1; k <= c.max_iter && !(a_done && b_done); ++k) {
    const CVec a_end_prev = a.u.back();
    if (!a_done) {
      sdc_sweep(level, a);
      a_done = sdc_residual(level, a) < c.tol;
    }
    if (!b_done) {
      set_initial_value(level, b, a_end_prev);
      sdc_sweep(level, b);
      b_done = sdc_residual(level, b) < c.tol && a_done;
    }
  }
  CHECK(std::abs(r.step_values[0][0] - a.u.back()[0]) < 1e-13);
  CHECK(std::abs(r.step_values[1][0] - b.u.back()[0]) < 1e-13);
  CHECK(r.all_converged());
}

TEST_CASE("critical path bounds", "[pfasst]") {
  const Problem p = named_problem("nls");
  const auto c = nls_config(32, 8);
  const auto r = pfasst_run(p, c, p.initial_hat(32), 0.0, p.t_final());
  CHECK(r.all_converged());
  CHECK(r.critical_path >= r.max_iterations() * r.fine_sweep_cost);
  CHECK(r.critical_path <= r.total_cost());
  for (int k : r.iterations) CHECK(k <= c.max_iter);
}

TEST_CASE("spatial over-resolution inflates the speedup", "[pfasst]") {
  const Problem p = named_problem("nls");
  const double tf = p.t_final();
  const auto over = pfasst_experiment(p, nls_config(512, 32), p.initial_hat(512), 0.0, tf, false);
  const auto well = pfasst_experiment(p, nls_config(32, 8), p.initial_hat(32), 0.0, tf, false);
  CHECK(over.result.all_converged());
  CHECK(well.result.all_converged());
  CHECK(over.speedup_vs_sdc > well.speedup_vs_sdc);
  // 32 points already reach the target accuracy; the finer grid only
  // removes the spatial error below it
  const CVec ref = reference_solution(p);
  const double e_over = solution_error(over.result.final_value(), ref);
  const double e_well = solution_error(well.result.final_value(), ref);
  CHECK(e_well < 3.0 * 5.8e-5);
  CHECK(e_over <= e_well);
}

TEST_CASE("tolerance sweep rows", "[pfasst]") {
  const Problem p = named_problem("nls");
  auto c = nls_config(32, 8);
  const CVec u0 = p.initial_hat(32);
  const CVec ref = reference_solution(p);
  const auto rows = tolerance_sweep(p, c, {1e-8}, u0, 0.0, p.t_final(), ref);
  REQUIRE(rows.size() == 1);
  c.tol = 1e-8;
  const auto s = pfasst_experiment(p, c, u0, 0.0, p.t_final(), false);
  CHECK(rows[0].iterations == s.result.max_iterations());
  CHECK(rows[0].speedup == s.speedup_vs_sdc);
  CHECK(rows[0].error == solution_error(s.result.final_value(), ref));

  const auto two = tolerance_sweep(p, c, {1e-5, 1e-9}, u0, 0.0, p.t_final(), ref);
  CHECK(two[0].tol == 1e-9);
  CHECK(two[0].iterations >= two[1].iterations);
  CHECK_THROWS(tolerance_sweep(p, c, {}, u0, 0.0, p.t_final(), ref));
}

TEST_CASE("summary json", "[pfasst]") {
  const Problem p = named_problem("nls");
  const auto s = pfasst_experiment(p, nls_config(32, 8), p.initial_hat(32), 0.0, p.t_final());
  const auto j = to_json(s);
  CHECK(j["cost"]["critical_path"] == s.result.critical_path);
  CHECK(j["speedup"]["vs_SDC"]["provenance"] == "model");
  REQUIRE(s.speedup_vs_mlsdc.has_value());
  CHECK(std::abs(s.efficiency_vs_sdc() - s.speedup_vs_sdc / 8.0) < 1e-15);
}
