#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pint/collocation.hpp"
#include "pint/reference.hpp"

using namespace pint;

namespace {

Problem scalar(cplx li, cplx le) {
  LinearParams p;
  p.lambda_i = li;
  p.lambda_e = le;
  return Problem("scalar", p);
}

// dense complex Gaussian elimination for tiny systems
std::vector<cplx> solve_dense(std::vector<std::vector<cplx>> A, std::vector<cplx> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const cplx f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cplx s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

// collocation solution of u' = lambda u at every node, scalar mode 0
std::vector<cplx> collocation_nodes(const CollocationTable& t, cplx lambda, double dt,
                                    cplx u0) {
  std::vector<std::vector<cplx>> A(t.m, std::vector<cplx>(t.m));
  std::vector<cplx> b(t.m, u0);
  for (std::size_t i = 0; i < t.m; ++i)
    for (std::size_t j = 0; j < t.m; ++j)
      A[i][j] = (i == j ? 1.0 : 0.0) - dt * lambda * t.Q[i][j];
  return solve_dense(A, b);
}

double max_node_change(const SweepState& a, const SweepState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    for (std::size_t k = 0; k < a.u[i].size(); ++k) d = std::max(d, std::abs(a.u[i][k] - b.u[i][k]));
  return d;
}

}  // namespace

TEST_CASE("Lobatto nodes and weights", "[collocation]") {
  const auto t2 = lobatto_table(2);
  CHECK(t2.nodes == std::vector<double>{0.0, 1.0});
  CHECK(std::abs(t2.weights[0] - 0.5) < 1e-15);
  CHECK(std::abs(t2.weights[1] - 0.5) < 1e-15);

  const auto t3 = lobatto_table(3);
  CHECK(std::abs(t3.nodes[1] - 0.5) < 1e-15);
  CHECK(std::abs(t3.weights[0] - 1.0 / 6.0) < 1e-14);
  CHECK(std::abs(t3.weights[1] - 2.0 / 3.0) < 1e-14);
  CHECK(std::abs(t3.weights[2] - 1.0 / 6.0) < 1e-14);

  const auto t5 = lobatto_table(5);
  const double s = std::sqrt(21.0) / 7.0;
  CHECK(std::abs(t5.nodes[1] - 0.5 * (1.0 - s)) < 1e-14);
  CHECK(std::abs(t5.nodes[2] - 0.5) < 1e-14);
  CHECK(std::abs(t5.nodes[3] - 0.5 * (1.0 + s)) < 1e-14);
  for (int deg = 0; deg <= 7; ++deg) {
    double q = 0.0;
    for (std::size_t j = 0; j < 5; ++j) q += t5.weights[j] * std::pow(t5.nodes[j], deg);
    CHECK(std::abs(q - 1.0 / (deg + 1)) < 1e-13);
  }
  CHECK_THROWS(lobatto_table(1));
}

TEST_CASE("Q integrates interpolating polynomials exactly", "[collocation]") {
  for (std::size_t m : {3u, 5u, 7u}) {
    const auto t = lobatto_table(m);
    for (int deg = 0; deg < static_cast<int>(m); ++deg)
      for (std::size_t i = 0; i < m; ++i) {
        double q = 0.0;
        for (std::size_t j = 0; j < m; ++j) q += t.Q[i][j] * std::pow(t.nodes[j], deg);
        CHECK(std::abs(q - std::pow(t.nodes[i], deg + 1) / (deg + 1)) < 1e-13);
      }
  }
}

TEST_CASE("collocation solution is a sweep fixed point with zero residual",
          "[collocation]") {
  const Problem p = scalar(-2.0, 0.5);
  const Level level(p, 2, lobatto_table(5));
  const double dt = 0.3;
  const auto exact = collocation_nodes(level.table(), -1.5, dt, 2.0);
  SweepState s = make_state(level, CVec{2.0, 0.0}, dt);
  for (std::size_t i = 0; i < 5; ++i) s.u[i] = {exact[i], 0.0};
  evaluate_all(level, s);
  CHECK(sdc_residual(level, s) < 1e-12);
  const SweepState before = s;
  sdc_sweep(level, s);
  CHECK(max_node_change(before, s) < 1e-12);
  CHECK(s.u[0] == before.u[0]);

  SECTION("residual scales with a perturbation") {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> res;
    for (double eps : {1e-3, 1e-6}) {
      SweepState q = before;
      for (std::size_t i = 1; i < 5; ++i) q.u[i][0] += eps * d(gen);
      evaluate_all(level, q);
      res.push_back(sdc_residual(level, q) / eps);
    }
    CHECK(res[0] > 0.05);
    CHECK(res[0] < 20.0);
    CHECK(res[1] > 0.05);
    CHECK(res[1] < 20.0);
  }
}

TEST_CASE("one IMEX sweep matches a triangular solve", "[collocation]") {
  const cplx li = -2.0, le = 0.5;
  const Problem p = scalar(li, le);
  const Level level(p, 2, lobatto_table(3));
  const auto& t = level.table();
  const double dt = 0.4;
  const cplx u0 = 2.0;  // mode 0 of the constant 1 field on n = 2
  SweepState s = make_state(level, CVec{u0, 0.0}, dt);
  // start from a non-trivial iterate
  s.u[1][0] = 1.7;
  s.u[2][0] = 1.4;
  evaluate_all(level, s);
  std::vector<cplx> old{s.u[0][0], s.u[1][0], s.u[2][0]};
  sdc_sweep(level, s);

  // (I - dt(QI li + QE le)) U' = u0 + dt Q (li+le) U - dt (QI li + QE le) U
  std::vector<std::vector<cplx>> A(3, std::vector<cplx>(3));
  std::vector<cplx> b(3);
  for (std::size_t i = 0; i < 3; ++i) {
    cplx rhs = u0;
    for (std::size_t j = 0; j < 3; ++j) {
      const cplx low = dt * (t.QI[i][j] * li + t.QE[i][j] * le);
      A[i][j] = (i == j ? 1.0 : 0.0) - (i == 0 ? 0.0 : low);
      if (i > 0) rhs += dt * t.Q[i][j] * (li + le) * old[j] - low * old[j];
    }
    b[i] = rhs;
  }
  const auto x = solve_dense(A, b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s.u[i][0] - x[i]) < 1e-12);
}

TEST_CASE("zero right-hand side converges in one sweep", "[collocation]") {
  const Problem p = scalar(0.0, 0.0);
  const CVec u0 = p.initial_hat(8);
  const Level level(p, 8, lobatto_table(5));
  SweepState s = make_state(level, u0, 0.5);
  CHECK(sdc_residual(level, s) == 0.0);
  const auto r = sdc_solve_step(level, u0, 0.5, 1e-12, 10);
  CHECK(r.iterations == 1);
  CHECK(r.converged);
  CHECK(r.value == u0);
}

TEST_CASE("SDC residual contracts on NLS", "[collocation]") {
  const Problem p = named_problem("nls");
  const Level level(p, 32, lobatto_table(5));
  const auto r = sdc_solve_step(level, p.initial_hat(32), p.t_final() / 8, 1e-300, 4);
  REQUIRE(r.residuals.size() == 4);
  for (std::size_t k = 1; k < 4; ++k) CHECK(r.residuals[k] < r.residuals[k - 1]);
  CHECK(r.cost_units == 4 * level.sweep_cost());
}

TEST_CASE("SDC with five Lobatto nodes has order eight", "[collocation]") {
  const Problem p = scalar(cplx{-1.0, 2.0}, 0.5);
  const Level level(p, 2, lobatto_table(5));
  const cplx exact = 2.0 * std::exp(cplx{-0.5, 2.0} * 2.0);
  std::vector<double> errs;
  for (int steps : {2, 4, 8}) {
    const auto r = sdc_run(level, CVec{2.0, 0.0}, 0.0, 2.0, steps, 1e-14, 100);
    REQUIRE(r.converged);
    errs.push_back(std::abs(r.value[0] - exact));
  }
  const double order = std::log2(errs[1] / errs[2]);
  INFO("errors " << errs[0] << " " << errs[1] << " " << errs[2]);
  CHECK(std::abs(order - 8.0) <= 1.0);
}

TEST_CASE("SDC on the NLS benchmark reaches the discretization floor", "[collocation]") {
  const Problem p = named_problem("nls");
  const Level level(p, 32, lobatto_table(5));
  const auto r = sdc_run(level, p.initial_hat(32), 0.0, p.t_final(), 8, 1e-10, 100);
  CHECK(r.converged);
  const double err = solution_error(r.value, reference_solution(p));
  CHECK(err > 5.8e-5 / 3.0);
  CHECK(err < 5.8e-5 * 3.0);
}

TEST_CASE("MLSDC with identical levels", "[collocation]") {
  const Problem p = named_problem("nls");
  const Level fine(p, 32, lobatto_table(5));
  const Level coarse(p, 32, lobatto_table(5));
  const TwoLevel levels(fine, coarse);
  const CVec u0 = p.initial_hat(32);
  const double dt = p.t_final() / 8;

  SweepState fs = make_state(fine, u0, dt);
  sdc_sweep(fine, fs);
  SweepState cs;
  levels.restrict_with_fas(fs, cs);
  for (const auto& tau : cs.tau) CHECK(max_norm_of_hat(tau) < 1e-12);

  // an MLSDC iteration is a coarse plus a fine sweep; with identical levels
  // both are plain SDC sweeps
  const auto ml = mlsdc_solve_step(levels, u0, dt, 1e-10, 100);
  const auto sd = sdc_solve_step(fine, u0, dt, 1e-10, 100);
  CHECK(ml.converged);
  CHECK(std::abs(ml.fine_sweeps + ml.coarse_sweeps - sd.fine_sweeps) <= 1);
  CHECK(solution_error(ml.value, sd.value) < 1e-9);
}

TEST_CASE("FAS correction vanishes for band-limited linear data", "[collocation]") {
  LinearParams lp;
  lp.lambda_i = -0.5;
  lp.lambda_e = 0.25;
  lp.nu = 0.1;
  lp.amplitude = 0.8;
  const Problem p("linear", lp);
  const Level fine(p, 32, lobatto_table(5));
  const Level coarse(p, 8, lobatto_table(5));
  const TwoLevel levels(fine, coarse);
  SweepState fs = make_state(fine, p.initial_hat(32), 0.2);
  sdc_sweep(fine, fs);
  sdc_sweep(fine, fs);
  SweepState cs;
  levels.restrict_with_fas(fs, cs);
  for (const auto& tau : cs.tau) CHECK(max_norm_of_hat(tau) < 1e-12);
}

TEST_CASE("MLSDC needs no more iterations than SDC on NLS", "[collocation]") {
  const Problem p = named_problem("nls");
  const Level fine(p, 512, lobatto_table(5));
  const Level coarse(p, 32, lobatto_table(5));
  const CVec u0 = p.initial_hat(512);
  const auto ml = mlsdc_run(TwoLevel(fine, coarse), u0, 0.0, p.t_final(), 8, 1e-10, 100);
  const auto sd = sdc_run(fine, u0, 0.0, p.t_final(), 8, 1e-10, 100);
  CHECK(ml.converged);
  CHECK(sd.converged);
  int kml = 0, ksd = 0;
  for (int k : ml.iterations) kml += k;
  for (int k : sd.iterations) ksd += k;
  CHECK(kml <= ksd);
}

TEST_CASE("transfer validation", "[collocation]") {
  const Problem p = named_problem("nls");
  const Level a(p, 16, lobatto_table(3));
  const Level b(p, 32, lobatto_table(5));
  CHECK_THROWS_AS(TwoLevel(a, b), InvalidTransfer);
  CHECK_THROWS_AS(sdc_solve_step(a, p.initial_hat(32), 0.1, 1e-8, 3), InvalidSize);
}
