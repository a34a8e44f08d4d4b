#pragma once

// One-step serial integrators for u_t = L u + N(u) with diagonal L.
//
//   IMEX_EULER     forward/backward Euler pair, order 1
//   IMEX_RK2       Ascher-Ruuth-Spiteri (2,2,2), gamma = 1 - 1/sqrt(2)
//   ARK4           Kennedy-Carpenter ARK4(3)6L[2]SA, order 4
//   ETD1           exponential Euler
//   ERK4_KROGSTAD  Krogstad's 4-stage exponential Runge-Kutta method
//
// Tableaus are listed in docs/tableaus.md.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "pint/errors.hpp"
#include "pint/problems.hpp"
#include "pint/spectral.hpp"

namespace pint {

enum class Scheme { imex_euler, imex_rk2, ark4, etd1, erk4_krogstad };

struct StepperSpec {
  Scheme scheme;
  const char* id;
  int nominal_order;
  /// Explicit right-hand-side evaluations per step.
  int cost_units;
  bool exponential;
};

inline const StepperSpec& stepper_spec(Scheme s) {
  static const std::array<StepperSpec, 5> specs{{
      {Scheme::imex_euler, "IMEX_EULER", 1, 1, false},
      {Scheme::imex_rk2, "IMEX_RK2", 2, 2, false},
      {Scheme::ark4, "ARK4", 4, 6, false},
      {Scheme::etd1, "ETD1", 1, 1, true},
      {Scheme::erk4_krogstad, "ERK4_KROGSTAD", 4, 4, true},
  }};
  return specs[static_cast<std::size_t>(s)];
}

inline std::string to_string(Scheme s) { return stepper_spec(s).id; }

inline Scheme scheme_from_string(const std::string& id) {
  for (Scheme s : {Scheme::imex_euler, Scheme::imex_rk2, Scheme::ark4,
                   Scheme::etd1, Scheme::erk4_krogstad})
    if (id == stepper_spec(s).id) return s;
  throw ConfigError("unknown stepper '" + id + "'");
}

// ---------------------------------------------------------------------------
// phi functions

inline constexpr double kPhiSeriesThreshold = 1e-2;
inline constexpr int kPhiSeriesTerms = 13;

/// e^z - 1 without cancellation for small |z|.
inline cplx expm1_complex(cplx z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

/// Truncated Taylor series sum_{k < terms} z^k / (k + j)!.
inline cplx phi_series(cplx z, int j, int terms = kPhiSeriesTerms) {
  double fact = 1.0;
  for (int i = 2; i <= j; ++i) fact *= i;
  cplx sum{0.0, 0.0};
  cplx zk{1.0, 0.0};
  for (int k = 0; k < terms; ++k) {
    sum += zk / fact;
    zk *= z;
    fact *= static_cast<double>(k + j + 1);
  }
  return sum;
}

/// phi_j(z) from the recurrence phi_{j+1} = (phi_j - 1/j!) / z, starting at
/// phi_1 = expm1(z)/z. Loses accuracy like eps/|z|^(j-1) near zero.
inline cplx phi_direct(cplx z, int j) {
  if (j == 0) return std::exp(z);
  cplx phi = expm1_complex(z) / z;
  double fact = 1.0;
  for (int i = 1; i < j; ++i) {
    phi = (phi - 1.0 / fact) / z;
    fact *= static_cast<double>(i + 1);
  }
  return phi;
}

inline cplx phi_eval(cplx z, int j) {
  if (j < 0 || j > 3) throw std::invalid_argument("phi index must be 0..3");
  if (j == 0) return std::exp(z);
  if (std::abs(z) < kPhiSeriesThreshold) return phi_series(z, j);
  return phi_direct(z, j);
}

/// Per-mode exponential coefficients for one step size.
struct PhiTable {
  CVec exp_full, exp_half;           // e^{z}, e^{z/2}
  CVec phi1_full, phi2_full, phi3_full;
  CVec phi1_half, phi2_half;

  PhiTable() = default;
  PhiTable(const CVec& lambda, double dt) {
    const std::size_t n = lambda.size();
    for (auto* v : {&exp_full, &exp_half, &phi1_full, &phi2_full, &phi3_full,
                    &phi1_half, &phi2_half})
      v->resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const cplx z = dt * lambda[j];
      exp_full[j] = phi_eval(z, 0);
      phi1_full[j] = phi_eval(z, 1);
      phi2_full[j] = phi_eval(z, 2);
      phi3_full[j] = phi_eval(z, 3);
      exp_half[j] = phi_eval(0.5 * z, 0);
      phi1_half[j] = phi_eval(0.5 * z, 1);
      phi2_half[j] = phi_eval(0.5 * z, 2);
    }
  }
};

// ---------------------------------------------------------------------------
// IMEX Runge-Kutta tableaus

struct ImexTableau {
  std::size_t stages;
  std::vector<std::vector<double>> ae;  // strictly lower triangular
  std::vector<std::vector<double>> ai;  // lower triangular
  std::vector<double> be, bi;
  std::vector<double> c;
};

inline const ImexTableau& imex_tableau(Scheme s) {
  static const ImexTableau euler{
      2,
      {{0.0, 0.0}, {1.0, 0.0}},
      {{0.0, 0.0}, {0.0, 1.0}},
      {1.0, 0.0},
      {0.0, 1.0},
      {0.0, 1.0}};
  static const ImexTableau ars222 = [] {
    const double g = 1.0 - 1.0 / std::sqrt(2.0);
    const double d = 1.0 - 1.0 / (2.0 * g);
    return ImexTableau{3,
                       {{0, 0, 0}, {g, 0, 0}, {d, 1.0 - d, 0}},
                       {{0, 0, 0}, {0, g, 0}, {0, 1.0 - g, g}},
                       {d, 1.0 - d, 0.0},
                       {0.0, 1.0 - g, g},
                       {0.0, g, 1.0}};
  }();
  static const ImexTableau ark436 = [] {
    ImexTableau t;
    t.stages = 6;
    t.ae.assign(6, std::vector<double>(6, 0.0));
    t.ai.assign(6, std::vector<double>(6, 0.0));
    t.ae[1][0] = 0.5;
    t.ae[2][0] = 13861.0 / 62500.0;
    t.ae[2][1] = 6889.0 / 62500.0;
    t.ae[3][0] = -116923316275.0 / 2393684061468.0;
    t.ae[3][1] = -2731218467317.0 / 15368042101831.0;
    t.ae[3][2] = 9408046702089.0 / 11113171139209.0;
    t.ae[4][0] = -451086348788.0 / 2902428689909.0;
    t.ae[4][1] = -2682348792572.0 / 7519795681897.0;
    t.ae[4][2] = 12662868775082.0 / 11960479115383.0;
    t.ae[4][3] = 3355817975965.0 / 11060851509271.0;
    t.ae[5][0] = 647845179188.0 / 3216320057751.0;
    t.ae[5][1] = 73281519250.0 / 8382639484533.0;
    t.ae[5][2] = 552539513391.0 / 3454668386233.0;
    t.ae[5][3] = 3354512671639.0 / 8306763924573.0;
    t.ae[5][4] = 4040.0 / 17871.0;

    t.ai[1][0] = 0.25;
    t.ai[1][1] = 0.25;
    t.ai[2][0] = 8611.0 / 62500.0;
    t.ai[2][1] = -1743.0 / 31250.0;
    t.ai[2][2] = 0.25;
    t.ai[3][0] = 5012029.0 / 34652500.0;
    t.ai[3][1] = -654441.0 / 2922500.0;
    t.ai[3][2] = 174375.0 / 388108.0;
    t.ai[3][3] = 0.25;
    t.ai[4][0] = 15267082809.0 / 155376265600.0;
    t.ai[4][1] = -71443401.0 / 120774400.0;
    t.ai[4][2] = 730878875.0 / 902184768.0;
    t.ai[4][3] = 2285395.0 / 8070912.0;
    t.ai[4][4] = 0.25;
    t.ai[5][0] = 82889.0 / 524892.0;
    t.ai[5][1] = 0.0;
    t.ai[5][2] = 15625.0 / 83664.0;
    t.ai[5][3] = 69875.0 / 102672.0;
    t.ai[5][4] = -2260.0 / 8211.0;
    t.ai[5][5] = 0.25;
    t.bi = t.ai[5];
    t.be = t.ai[5];
    t.c = {0.0, 0.5, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0};
    return t;
  }();
  switch (s) {
    case Scheme::imex_euler: return euler;
    case Scheme::imex_rk2: return ars222;
    case Scheme::ark4: return ark436;
    default: throw std::invalid_argument("not an IMEX scheme");
  }
}

// ---------------------------------------------------------------------------

/// A scheme bound to a problem, grid size and step size. The problem must
/// outlive the stepper. step() is const and safe to call concurrently.
class Stepper {
 public:
  Stepper(Scheme scheme, const Problem& problem, std::size_t n, double dt)
      : scheme_(scheme), problem_(&problem), n_(n), dt_(dt),
        lambda_(problem.symbol_table(n)) {
    if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
    const auto& spec = stepper_spec(scheme);
    if (spec.exponential) {
      phi_ = PhiTable(lambda_, dt);
    } else {
      const auto& tab = imex_tableau(scheme);
      inv_denom_.resize(tab.stages);
      for (std::size_t i = 0; i < tab.stages; ++i) {
        inv_denom_[i].resize(n);
        for (std::size_t j = 0; j < n; ++j) {
          const cplx denom = 1.0 - dt * tab.ai[i][i] * lambda_[j];
          if (std::abs(denom) < 1e-14)
            throw SingularSolve("stage solve singular at mode " +
                                std::to_string(j));
          inv_denom_[i][j] = 1.0 / denom;
        }
      }
    }
  }

  const StepperSpec& spec() const noexcept { return stepper_spec(scheme_); }
  Scheme scheme() const noexcept { return scheme_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return n_; }
  const Problem& problem() const noexcept { return *problem_; }

  /// Advance u (Fourier coefficients) by one step, in place.
  void step(CVec& u) const {
    if (u.size() != n_) throw InvalidSize("state size does not match stepper");
    switch (scheme_) {
      case Scheme::etd1: step_etd1(u); break;
      case Scheme::erk4_krogstad: step_krogstad(u); break;
      default: step_imex(u); break;
    }
  }

 private:
  void step_imex(CVec& u) const {
    const auto& tab = imex_tableau(scheme_);
    const std::size_t s = tab.stages;
    std::vector<CVec> fe(s), fi(s);
    CVec stage(n_);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        cplx acc = u[j];
        for (std::size_t l = 0; l < i; ++l) {
          if (tab.ae[i][l] != 0.0) acc += dt_ * tab.ae[i][l] * fe[l][j];
          if (tab.ai[i][l] != 0.0) acc += dt_ * tab.ai[i][l] * fi[l][j];
        }
        stage[j] = acc * inv_denom_[i][j];
      }
      if (needs_explicit(tab, i)) fe[i] = problem_->explicit_rhs(stage);
      fi[i].resize(n_);
      for (std::size_t j = 0; j < n_; ++j) fi[i][j] = lambda_[j] * stage[j];
    }
    for (std::size_t j = 0; j < n_; ++j) {
      cplx acc = u[j];
      for (std::size_t l = 0; l < s; ++l) {
        if (tab.be[l] != 0.0) acc += dt_ * tab.be[l] * fe[l][j];
        if (tab.bi[l] != 0.0) acc += dt_ * tab.bi[l] * fi[l][j];
      }
      u[j] = acc;
    }
  }

  static bool needs_explicit(const ImexTableau& tab, std::size_t i) {
    if (tab.be[i] != 0.0) return true;
    for (std::size_t r = i + 1; r < tab.stages; ++r)
      if (tab.ae[r][i] != 0.0) return true;
    return false;
  }

  void step_etd1(CVec& u) const {
    const CVec nu = problem_->explicit_rhs(u);
    for (std::size_t j = 0; j < n_; ++j)
      u[j] = phi_.exp_full[j] * u[j] + dt_ * phi_.phi1_full[j] * nu[j];
  }

  void step_krogstad(CVec& u) const {
    const double h = dt_;
    const CVec nu = problem_->explicit_rhs(u);
    CVec a(n_), b(n_), c(n_);
    for (std::size_t j = 0; j < n_; ++j)
      a[j] = phi_.exp_half[j] * u[j] + 0.5 * h * phi_.phi1_half[j] * nu[j];
    const CVec na = problem_->explicit_rhs(a);
    for (std::size_t j = 0; j < n_; ++j)
      b[j] = phi_.exp_half[j] * u[j] +
             h * (0.5 * phi_.phi1_half[j] - phi_.phi2_half[j]) * nu[j] +
             h * phi_.phi2_half[j] * na[j];
    const CVec nb = problem_->explicit_rhs(b);
    for (std::size_t j = 0; j < n_; ++j)
      c[j] = phi_.exp_full[j] * u[j] +
             h * (phi_.phi1_full[j] - 2.0 * phi_.phi2_full[j]) * nu[j] +
             2.0 * h * phi_.phi2_full[j] * nb[j];
    const CVec nc = problem_->explicit_rhs(c);
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx p1 = phi_.phi1_full[j], p2 = phi_.phi2_full[j],
                 p3 = phi_.phi3_full[j];
      u[j] = phi_.exp_full[j] * u[j] +
             h * ((p1 - 3.0 * p2 + 4.0 * p3) * nu[j] +
                  (2.0 * p2 - 4.0 * p3) * (na[j] + nb[j]) +
                  (4.0 * p3 - p2) * nc[j]);
    }
  }

  Scheme scheme_;
  const Problem* problem_;
  std::size_t n_;
  double dt_;
  CVec lambda_;
  std::vector<CVec> inv_denom_;
  PhiTable phi_;
};

/// n_steps equal steps over [t0, t1]. Adds the explicit-evaluation count to
/// *cost_units when given; appends the state after every step to
/// *trajectory when given.
inline CVec integrate(const Stepper& stepper, CVec u, long n_steps,
                      double* cost_units = nullptr,
                      std::vector<CVec>* trajectory = nullptr) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  for (long s = 0; s < n_steps; ++s) {
    stepper.step(u);
    if (trajectory) trajectory->push_back(u);
  }
  if (cost_units)
    *cost_units += static_cast<double>(n_steps) * stepper.spec().cost_units;
  return u;
}

inline CVec integrate(Scheme scheme, const Problem& problem, const CVec& u0,
                      double t0, double t1, long n_steps,
                      double* cost_units = nullptr,
                      std::vector<CVec>* trajectory = nullptr) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (!(t1 > t0)) throw std::invalid_argument("integrate needs t1 > t0");
  const Stepper stepper(scheme, problem, u0.size(),
                        (t1 - t0) / static_cast<double>(n_steps));
  return integrate(stepper, u0, n_steps, cost_units, trajectory);
}

}  // namespace pint
