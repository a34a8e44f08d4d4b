#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "pint/speedup.hpp"

using namespace pint;

TEST_CASE("Parareal model reproduces the ADR speedups", "[speedup]") {
  const double alpha = 1.0 / 64.0;
  CHECK(std::abs(parareal_theoretical_speedup({200, alpha, 3}) - 32.40) <= 0.01);
  CHECK(std::abs(parareal_theoretical_speedup({200, alpha, 10}) - 15.06) <= 0.02);
  CHECK(std::abs(parareal_theoretical_speedup({200, alpha, 5}) - 24.38) <= 0.01);
  CHECK(parareal_theoretical_speedup({32, 0.0, 4}) == 8.0);
}

TEST_CASE("Parareal model input checks and monotonicity", "[speedup]") {
  CHECK_THROWS(parareal_theoretical_speedup({0.5, 0.1, 1}));
  CHECK_THROWS(parareal_theoretical_speedup({8, 1.5, 1}));
  CHECK_THROWS(parareal_theoretical_speedup({8, 0.1, 0}));
  double prev = 0.0;
  for (int np = 1; np <= 256; np *= 2) {
    const double s = parareal_theoretical_speedup({double(np), 1.0 / 32, 2});
    CHECK(s > prev);
    prev = s;
  }
  prev = 1e300;
  for (int k = 1; k <= 10; ++k) {
    const double s = parareal_theoretical_speedup({64, 1.0 / 32, double(k)});
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("overhead model", "[speedup]") {
  CHECK(overhead_speedup({20, 0.0, 0.0, 5, 5}) == 20.0);
  double prev = 1e300;
  for (double beta : {0.0, 0.5, 1.0, 3.0, 10.0}) {
    const double s = overhead_speedup({20, 0.05, beta, 7, 14});
    CHECK(s < prev);
    prev = s;
  }
  // both models reduce to N_P / K when alpha -> 0 and K_P = K_S = K
  CHECK(std::abs(overhead_speedup({16, 0.0, 0.0, 1, 4}) -
                 parareal_theoretical_speedup({16, 0.0, 4})) < 1e-12);
  CHECK_THROWS(overhead_speedup({20, 0.0, -1.0, 5, 5}));
  CHECK_THROWS(overhead_speedup({20, 0.0, 0.0, 0, 5}));
}

TEST_CASE("iteration-count, measured and efficiency formulas", "[speedup]") {
  const double s = iteration_count_speedup(40 + 60, 7 + 7);
  CHECK(std::round(s * 10) / 10 == 7.1);
  // integer oracle: 100 / 14 = 50 / 7
  CHECK(s * 7 == Catch::Approx(50.0).epsilon(1e-15));
  CHECK(iteration_count_speedup(9, 9) == 1.0);
  CHECK_THROWS(iteration_count_speedup(9, 0));

  CHECK(std::round(measured_speedup(44.3, 18.3) * 10) / 10 == 2.4);
  CHECK(std::abs(measured_speedup(102.5, 32) - 3.20) < 0.005);
  CHECK(measured_speedup(3.0, 3.0) == 1.0);
  CHECK_THROWS(measured_speedup(1.0, 0.0));

  CHECK(parallel_efficiency(5.7, 8) == 0.7125);
  CHECK(std::round(parallel_efficiency(5.7, 8) * 100) == 71);
  CHECK(std::round(parallel_efficiency(2.7, 8) * 100) == 34);
  CHECK(parallel_efficiency(8, 8) == 1.0);
  CHECK(parallel_efficiency(s, 20) == Catch::Approx(0.357).margin(0.001));
}

TEST_CASE("solve_beta inverts the overhead model", "[speedup]") {
  OverheadSpeedupInputs in{20, 0.05, 0.0, 7, 14};
  CHECK(solve_beta(overhead_speedup(in), in) < 1e-9);

  std::mt19937 gen(42);
  std::uniform_real_distribution<double> d(0.0, 50.0);
  for (int i = 0; i < 20; ++i) {
    in.beta = d(gen);
    const double beta0 = in.beta;
    CHECK(std::abs(solve_beta(overhead_speedup(in), in) - beta0) <= 1e-9);
  }
  // no beta >= 0 makes the run faster than ideal
  in.beta = 0.0;
  CHECK_THROWS_AS(solve_beta(overhead_speedup(in) * 1.01, in), std::domain_error);
}

TEST_CASE("control-run overhead fit", "[speedup]") {
  // 20 processors, parallel iterations twice the serial ones, cheap coarse
  // levels; the measured 2.4 then needs an overhead near three fine sweeps
  const double beta = solve_beta(2.4, {20, 0.05, 0.0, 7, 14});
  CHECK(beta > 2.5);
  CHECK(beta < 3.5);
}

TEST_CASE("speedup records carry provenance", "[speedup]") {
  const auto r = speedup_record(32.4, PararealSpeedupInputs{200, 1.0 / 64, 3});
  CHECK(r["provenance"] == "model");
  CHECK(r["inputs"]["K"] == 3.0);
  const auto m = measured_record(44.3, 18.3);
  CHECK(m["provenance"] == "measured");
  CHECK(m["value"].get<double>() == measured_speedup(44.3, 18.3));
}
