#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "pint/problems.hpp"
#include "pint/steppers.hpp"

using namespace pint;

namespace {

constexpr Scheme kAll[] = {Scheme::imex_euler, Scheme::imex_rk2, Scheme::ark4,
                           Scheme::etd1, Scheme::erk4_krogstad};

// slope of log(err) against log(dt) by least squares
double fitted_order(const std::vector<double>& dts, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

Problem dahlquist(cplx li, cplx le) {
  LinearParams p;
  p.lambda_i = li;
  p.lambda_e = le;
  return Problem("dahlquist", p);
}

}  // namespace

TEST_CASE("stepper table", "[steppers]") {
  for (Scheme s : kAll) {
    const auto& spec = stepper_spec(s);
    CHECK(spec.cost_units > 0);
    CHECK((spec.nominal_order == 1 || spec.nominal_order == 2 || spec.nominal_order == 4));
    CHECK(scheme_from_string(spec.id) == s);
  }
  CHECK(stepper_spec(Scheme::ark4).cost_units == 6);
  CHECK(stepper_spec(Scheme::erk4_krogstad).cost_units == 4);
  CHECK_THROWS_AS(scheme_from_string("RK45"), ConfigError);
}

TEST_CASE("IMEX tableaus are consistent", "[steppers]") {
  for (Scheme s : {Scheme::imex_euler, Scheme::imex_rk2, Scheme::ark4}) {
    const auto& t = imex_tableau(s);
    double be = 0.0, bi = 0.0;
    for (std::size_t i = 0; i < t.stages; ++i) {
      be += t.be[i];
      bi += t.bi[i];
      double re = 0.0, ri = 0.0;
      for (std::size_t j = 0; j < t.stages; ++j) {
        re += t.ae[i][j];
        ri += t.ai[i][j];
      }
      CHECK(std::abs(re - t.c[i]) < 1e-12);
      CHECK(std::abs(ri - t.c[i]) < 1e-12);
    }
    CHECK(std::abs(be - 1.0) < 1e-12);
    CHECK(std::abs(bi - 1.0) < 1e-12);
  }
}

TEST_CASE("zero right-hand side leaves the state unchanged", "[steppers]") {
  const Problem p = dahlquist(0.0, 0.0);
  const CVec u0 = p.initial_hat(8);
  for (Scheme s : kAll) CHECK(integrate(s, p, u0, 0.0, 1.0, 3) == u0);
}

TEST_CASE("ETD1 is exact for purely linear problems", "[steppers]") {
  LinearParams lp;
  lp.lambda_i = -1.3;
  lp.lambda_e = 0.0;
  lp.nu = 0.1;
  lp.amplitude = 0.5;
  const Problem p("linear", lp);
  const CVec u0 = p.initial_hat(16);
  const double dt = 0.7;
  CVec u = u0;
  Stepper(Scheme::etd1, p, 16, dt).step(u);
  for (std::size_t j = 0; j < 16; ++j) {
    const cplx expect = std::exp(dt * p.symbol(wavenumber(j, 16, p.length()))) * u0[j];
    CHECK(std::abs(u[j] - expect) < 1e-13);
  }
}

TEST_CASE("observed orders on the split Dahlquist problem", "[steppers]") {
  const Problem p = dahlquist(-2.0, 0.5);
  const CVec u0 = p.initial_hat(2);
  const double exact = std::exp(-1.5);
  for (Scheme s : kAll) {
    std::vector<double> dts, errs;
    for (long steps = 32; steps <= 512; steps *= 2) {
      const CVec u = integrate(s, p, u0, 0.0, 1.0, steps);
      dts.push_back(1.0 / steps);
      errs.push_back(std::abs(u[0] / 2.0 - exact));
    }
    const int nominal = stepper_spec(s).nominal_order;
    const double tol = nominal == 4 ? 0.3 : 0.2;
    INFO(to_string(s) << " order " << fitted_order(dts, errs));
    CHECK(std::abs(fitted_order(dts, errs) - nominal) <= tol);
  }
}

TEST_CASE("orders on a stiff-free nonlinear problem", "[steppers]") {
  // NLS on a short interval; self-convergence against a 4x finer solution
  NlsParams np;
  np.t_final = 0.05;
  const Problem p("nls-short", np);
  const CVec u0 = p.initial_hat(32);
  for (Scheme s : {Scheme::imex_rk2, Scheme::ark4, Scheme::erk4_krogstad}) {
    const CVec ref = integrate(s, p, u0, 0.0, 0.05, 2048);
    std::vector<double> dts, errs;
    for (long steps = 16; steps <= 64; steps *= 2) {
      dts.push_back(0.05 / steps);
      errs.push_back(solution_error(integrate(s, p, u0, 0.0, 0.05, steps), ref));
    }
    INFO(to_string(s));
    CHECK(std::abs(fitted_order(dts, errs) - stepper_spec(s).nominal_order) <= 0.5);
  }
}

TEST_CASE("step composition is deterministic", "[steppers]") {
  const Problem p = named_problem("nls");
  const CVec u0 = p.initial_hat(32);
  for (Scheme s : kAll) {
    const Stepper st(s, p, 32, 0.01);
    const CVec once = integrate(st, u0, 20);
    const CVec twice = integrate(st, integrate(st, u0, 10), 10);
    CHECK(once == twice);
  }
}

TEST_CASE("cost accounting and trajectories", "[steppers]") {
  const Problem p = named_problem("nls");
  double cost = 0.0;
  std::vector<CVec> traj;
  integrate(Scheme::ark4, p, p.initial_hat(16), 0.0, 0.1, 5, &cost, &traj);
  CHECK(cost == 30.0);
  CHECK(traj.size() == 5);
  CHECK_THROWS(integrate(Scheme::ark4, p, p.initial_hat(16), 0.0, 0.1, 0));
  CHECK_THROWS(integrate(Scheme::ark4, p, p.initial_hat(16), 0.1, 0.1, 1));
}

TEST_CASE("linear problems propagate linearly", "[steppers]") {
  LinearParams lp;
  lp.lambda_i = -1.0;
  lp.lambda_e = 0.3;
  lp.nu = 0.05;
  const Problem p("linear", lp);
  std::mt19937 gen(5);
  std::normal_distribution<double> d;
  CVec a(16), b(16);
  for (std::size_t j = 0; j < 16; ++j) {
    a[j] = {d(gen), d(gen)};
    b[j] = {d(gen), d(gen)};
  }
  CVec ab(16);
  for (std::size_t j = 0; j < 16; ++j) ab[j] = 2.0 * a[j] - 3.0 * b[j];
  for (Scheme s : kAll) {
    const CVec ua = integrate(s, p, a, 0.0, 1.0, 7);
    const CVec ub = integrate(s, p, b, 0.0, 1.0, 7);
    const CVec uab = integrate(s, p, ab, 0.0, 1.0, 7);
    for (std::size_t j = 0; j < 16; ++j)
      CHECK(std::abs(uab[j] - (2.0 * ua[j] - 3.0 * ub[j])) < 1e-12);
  }
}

TEST_CASE("phi functions", "[steppers]") {
  CHECK(phi_eval(0.0, 1) == cplx{1.0, 0.0});
  CHECK(std::abs(phi_eval(0.0, 2) - 0.5) < 1e-16);
  CHECK(std::abs(phi_eval(0.0, 3) - 1.0 / 6.0) < 1e-16);
  CHECK(std::abs(phi_eval(1.0, 1) - (std::numbers::e - 1.0)) < 1e-12);

  for (cplx z : {cplx{0.05, 0.0}, cplx{0.0, 0.1}, cplx{-0.3, 0.3}, cplx{-0.2, 0.0}}) {
    for (int j = 1; j <= 3; ++j) {
      INFO("z = " << z << ", j = " << j);
      CHECK(std::abs(phi_series(z, j) - phi_direct(z, j)) < 1e-12);
    }
  }
  // recurrence phi_{j+1} = (phi_j - 1/j!) / z above the series threshold
  for (cplx z : {cplx{0.5, 0.0}, cplx{-3.0, 2.0}, cplx{-40.0, 0.0}, cplx{0.0, 8.0}}) {
    double fact = 1.0;
    for (int j = 1; j <= 2; ++j) {
      fact *= j;
      CHECK(std::abs(phi_eval(z, j + 1) - (phi_eval(z, j) - 1.0 / fact) / z) < 1e-12);
    }
  }
}
