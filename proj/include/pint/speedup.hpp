#pragma once

// Speedup and efficiency models.
//
//   Parareal:   S = N_P / (N_P alpha + K (1 + alpha))
//   overhead:   S = N_P / (N_P alpha / K_S + (K_P / K_S)(1 + alpha + beta))

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace pint {

struct PararealSpeedupInputs {
  double n_p = 1.0;
  double alpha = 0.0;
  double K = 1.0;
};

struct OverheadSpeedupInputs {
  double n_p = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double k_s = 1.0;
  double k_p = 1.0;
};

inline double parareal_theoretical_speedup(const PararealSpeedupInputs& in) {
  if (in.n_p < 1.0) throw std::invalid_argument("N_P must be >= 1");
  if (in.alpha < 0.0 || in.alpha > 1.0)
    throw std::invalid_argument("alpha must lie in [0, 1]");
  if (in.K < 1.0) throw std::invalid_argument("K must be >= 1");
  return in.n_p / (in.n_p * in.alpha + in.K * (1.0 + in.alpha));
}

inline double overhead_speedup(const OverheadSpeedupInputs& in) {
  if (in.n_p < 1.0) throw std::invalid_argument("N_P must be >= 1");
  if (in.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (in.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
  if (!(in.k_s > 0.0) || !(in.k_p > 0.0))
    throw std::invalid_argument("iteration counts must be positive");
  return in.n_p /
         (in.n_p * in.alpha / in.k_s + (in.k_p / in.k_s) * (1.0 + in.alpha + in.beta));
}

inline double iteration_count_speedup(double serial_iters, double parallel_iters) {
  if (!(parallel_iters > 0.0))
    throw std::invalid_argument("parallel iteration count must be positive");
  return serial_iters / parallel_iters;
}

inline double measured_speedup(double t_serial, double t_parallel) {
  if (!(t_parallel > 0.0)) throw std::invalid_argument("parallel time must be positive");
  return t_serial / t_parallel;
}

inline double parallel_efficiency(double speedup, double n_p) {
  if (n_p < 1.0) throw std::invalid_argument("N_P must be >= 1");
  return speedup / n_p;
}

/// beta with overhead_speedup(inputs with beta) == measured, by bisection on
/// [0, 1000] to 1e-10. Throws if no such beta exists.
inline double solve_beta(double measured, OverheadSpeedupInputs in) {
  in.beta = 0.0;
  const double s0 = overhead_speedup(in);
  in.beta = 1000.0;
  const double s1 = overhead_speedup(in);
  if (!(measured <= s0) || !(measured >= s1))
    throw std::domain_error("no beta in [0, 1000] reproduces S = " +
                            std::to_string(measured));
  double lo = 0.0, hi = 1000.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    in.beta = mid;
    if (overhead_speedup(in) > measured) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Speedup value with the model and inputs that produced it.
inline nlohmann::json speedup_record(double value, const PararealSpeedupInputs& in) {
  return {{"value", value},
          {"provenance", "model"},
          {"formula", "S = N_P / (N_P*alpha + K*(1+alpha))"},
          {"inputs", {{"N_P", in.n_p}, {"alpha", in.alpha}, {"K", in.K}}}};
}

inline nlohmann::json speedup_record(double value, const OverheadSpeedupInputs& in) {
  return {{"value", value},
          {"provenance", "model"},
          {"formula", "S = N_P / (N_P*alpha/K_S + (K_P/K_S)*(1+alpha+beta))"},
          {"inputs",
           {{"N_P", in.n_p}, {"alpha", in.alpha}, {"beta", in.beta},
            {"K_S", in.k_s}, {"K_P", in.k_p}}}};
}

inline nlohmann::json measured_record(double t_serial, double t_parallel) {
  return {{"value", measured_speedup(t_serial, t_parallel)},
          {"provenance", "measured"},
          {"formula", "S = serial wall clock / parallel wall clock"},
          {"inputs", {{"t_serial", t_serial}, {"t_parallel", t_parallel}}}};
}

}  // namespace pint
