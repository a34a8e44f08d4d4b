#pragma once

// Benchmark PDEs as implicit/explicit splittings u_t = L u + N(u) with a
// Fourier-diagonal linear part L:
//   ADR  u_t = v u_x + gamma u u_x + nu u_xx + beta_r u (a - u)(b - u)
//   NLS  u_t = i u_xx + 2 i |u|^2 u
//   KS   u_t = -u u_x - u_xx - u_xxxx
// plus a linear test equation u_t = lambda_i u + nu u_xx + lambda_e u whose
// last term is treated explicitly.

#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pint/errors.hpp"
#include "pint/hash.hpp"
#include "pint/spectral.hpp"

namespace pint {

enum class ProblemKind { adr, nls, ks, linear };

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::adr: return "adr";
    case ProblemKind::nls: return "nls";
    case ProblemKind::ks: return "ks";
    case ProblemKind::linear: return "linear";
  }
  return "?";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "adr") return ProblemKind::adr;
  if (s == "nls") return ProblemKind::nls;
  if (s == "ks") return ProblemKind::ks;
  if (s == "linear") return ProblemKind::linear;
  throw ConfigError("unknown problem kind '" + s + "'");
}

/// Advection-diffusion-reaction. beta_r is the reaction strength.
struct AdrParams {
  double v = -0.5;
  double gamma = 0.25;
  double nu = 0.01;
  double beta_r = -5.0;
  double a = 1.0;
  double b = 0.0;
  double d = 0.55;
  double sigma = 0.02;
  double length = 2.0 * std::numbers::pi;
  double t_final = 30.0;
};

/// Focusing cubic Schroedinger equation on [0, 2 pi). The initial value is a
/// space-periodic Akhmediev breather at maximal compression; breather_a
/// controls its sharpness (1/4 is the smooth classical member).
struct NlsParams {
  double length = 2.0 * std::numbers::pi;
  double t_final = 0.5;
  double breather_a = 1.0 / 3.0;
};

struct KsParams {
  double length = 32.0 * std::numbers::pi;
  double t_final = 40.0;
};

/// Linear split test equation; u0 = 1 + amplitude sin(x) on [0, 2 pi).
struct LinearParams {
  cplx lambda_i{-2.0, 0.0};
  cplx lambda_e{0.5, 0.0};
  double nu = 0.0;
  double amplitude = 0.0;
  double length = 2.0 * std::numbers::pi;
  double t_final = 1.0;
};

using ProblemParams = std::variant<AdrParams, NlsParams, KsParams, LinearParams>;

class Problem {
 public:
  Problem(std::string name, AdrParams p) : name_(std::move(name)), params_(p) {
    if (p.nu < 0.0) throw ConfigError("ADR: nu must be >= 0");
    if (!(p.sigma > 0.0)) throw ConfigError("ADR: sigma must be > 0");
    validate_common(p.length, p.t_final);
  }
  Problem(std::string name, NlsParams p) : name_(std::move(name)), params_(p) {
    if (!(p.breather_a > 0.0 && p.breather_a < 0.5))
      throw ConfigError("NLS: breather_a must lie in (0, 1/2)");
    validate_common(p.length, p.t_final);
  }
  Problem(std::string name, KsParams p) : name_(std::move(name)), params_(p) {
    validate_common(p.length, p.t_final);
  }
  Problem(std::string name, LinearParams p)
      : name_(std::move(name)), params_(p) {
    if (p.nu < 0.0) throw ConfigError("linear: nu must be >= 0");
    validate_common(p.length, p.t_final);
  }

  const std::string& name() const noexcept { return name_; }
  const ProblemParams& params() const noexcept { return params_; }

  ProblemKind kind() const noexcept {
    return static_cast<ProblemKind>(params_.index());
  }

  double length() const {
    return std::visit([](const auto& p) { return p.length; }, params_);
  }
  double t_final() const {
    return std::visit([](const auto& p) { return p.t_final; }, params_);
  }

  /// ADR and KS are real-valued; NLS is genuinely complex.
  bool is_real() const noexcept {
    if (kind() == ProblemKind::linear) {
      const auto& p = std::get<LinearParams>(params_);
      return p.lambda_i.imag() == 0.0 && p.lambda_e.imag() == 0.0;
    }
    return kind() != ProblemKind::nls;
  }

  /// Eigenvalue lambda(k) of the linear (implicit or exponential) part.
  cplx symbol(double k) const {
    const cplx ik{0.0, k};
    switch (kind()) {
      case ProblemKind::adr: {
        const auto& p = std::get<AdrParams>(params_);
        return p.v * ik + p.nu * ik * ik;
      }
      case ProblemKind::nls:
        return cplx{0.0, 1.0} * ik * ik;
      case ProblemKind::ks:
        return -(ik * ik) - (ik * ik) * (ik * ik);
      case ProblemKind::linear: {
        const auto& p = std::get<LinearParams>(params_);
        return p.lambda_i + p.nu * ik * ik;
      }
    }
    return {};
  }

  CVec symbol_table(std::size_t n) const {
    CVec lambda(n);
    const double len = length();
    for (std::size_t j = 0; j < n; ++j) lambda[j] = symbol(wavenumber(j, n, len));
    return lambda;
  }

  /// Nonlinear term N(u), Fourier in, Fourier out. Derivatives are taken in
  /// Fourier space and products in physical space, without dealiasing.
  CVec explicit_rhs(const CVec& u_hat) const {
    const std::size_t n = u_hat.size();
    const FftPlan& plan = fft_plan(n);
    CVec u = u_hat;
    plan.inverse(u);
    CVec out(n);
    switch (kind()) {
      case ProblemKind::adr: {
        const auto& p = std::get<AdrParams>(params_);
        CVec ux = differentiate_hat(u_hat, p.length, 1);
        plan.inverse(ux);
        for (std::size_t j = 0; j < n; ++j) {
          const cplx uj = u[j];
          out[j] = p.gamma * uj * ux[j] + p.beta_r * uj * (p.a - uj) * (p.b - uj);
        }
        plan.forward(out);
        break;
      }
      case ProblemKind::nls: {
        for (std::size_t j = 0; j < n; ++j)
          out[j] = cplx{0.0, 2.0} * std::norm(u[j]) * u[j];
        plan.forward(out);
        break;
      }
      case ProblemKind::ks: {
        // -u u_x = -(u^2)_x / 2; the conservative form keeps the mean exact
        for (std::size_t j = 0; j < n; ++j) out[j] = u[j] * u[j];
        plan.forward(out);
        out = differentiate_hat(out, length(), 1);
        for (auto& v : out) v *= -0.5;
        break;
      }
      case ProblemKind::linear: {
        const cplx le = std::get<LinearParams>(params_).lambda_e;
        for (std::size_t j = 0; j < n; ++j) out[j] = le * u_hat[j];
        break;
      }
    }
    return out;
  }

  /// Physical samples of the initial condition at x_j = j L / n.
  CVec initial_values(std::size_t n) const {
    if (!is_power_of_two(n) || n < 2)
      throw InvalidSize("grid size must be a power of two >= 2");
    CVec u(n);
    const double len = length();
    for (std::size_t j = 0; j < n; ++j) {
      const double x = len * static_cast<double>(j) / static_cast<double>(n);
      u[j] = initial_value_at(x);
    }
    return u;
  }

  CVec initial_hat(std::size_t n) const { return fft(initial_values(n)); }

  SpectralField initial_condition(std::size_t n) const {
    return dft_forward(SpectralField::from_physical(length(), initial_values(n)));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind());
    j["name"] = name_;
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, AdrParams>) {
            j["params"] = {{"v", p.v},         {"gamma", p.gamma},
                           {"nu", p.nu},       {"beta_r", p.beta_r},
                           {"a", p.a},         {"b", p.b},
                           {"d", p.d},         {"sigma", p.sigma},
                           {"length", p.length}, {"t_final", p.t_final}};
          } else if constexpr (std::is_same_v<T, NlsParams>) {
            j["params"] = {{"length", p.length},
                           {"t_final", p.t_final},
                           {"breather_a", p.breather_a}};
          } else if constexpr (std::is_same_v<T, LinearParams>) {
            j["params"] = {{"lambda_i", {p.lambda_i.real(), p.lambda_i.imag()}},
                           {"lambda_e", {p.lambda_e.real(), p.lambda_e.imag()}},
                           {"nu", p.nu},
                           {"amplitude", p.amplitude},
                           {"length", p.length},
                           {"t_final", p.t_final}};
          } else {
            j["params"] = {{"length", p.length}, {"t_final", p.t_final}};
          }
        },
        params_);
    return j;
  }

  /// Hash of kind and parameters (not of the preset name).
  std::string hash() const {
    auto j = to_json();
    j.erase("name");
    return hex64(fnv1a64(j.dump()));
  }

 private:
  static void validate_common(double length, double t_final) {
    if (!(length > 0.0)) throw ConfigError("domain length must be > 0");
    if (!(t_final > 0.0)) throw ConfigError("final time must be > 0");
  }

  cplx initial_value_at(double x) const {
    switch (kind()) {
      case ProblemKind::adr: {
        const auto& p = std::get<AdrParams>(params_);
        const double s = x - std::numbers::pi;
        return 1.0 - p.d * (1.0 - std::exp(-(s * s * s * s) / p.sigma));
      }
      case ProblemKind::nls: {
        const double a = std::get<NlsParams>(params_).breather_a;
        const double scale = 1.0 / (2.0 * std::sqrt(1.0 - 2.0 * a));
        const double r = std::sqrt(2.0 * a) * std::cos(x);
        return scale * ((1.0 - 4.0 * a) + r) / (r - 1.0);
      }
      case ProblemKind::ks:
        return std::cos(x / 16.0) * (1.0 + std::sin(x / 16.0));
      case ProblemKind::linear:
        return 1.0 + std::get<LinearParams>(params_).amplitude * std::sin(x);
    }
    return {};
  }

  std::string name_;
  ProblemParams params_;
};

/// Named parameter sets: adr-steady, adr-bump, adr-diffused, nls, ks, linear.
inline Problem named_problem(const std::string& name) {
  if (name == "adr-steady") return Problem(name, AdrParams{});
  if (name == "adr-bump") {
    AdrParams p;
    p.b = 0.5;
    return Problem(name, p);
  }
  if (name == "adr-diffused") {
    AdrParams p;
    p.b = 0.5;
    p.nu = 0.04;
    return Problem(name, p);
  }
  if (name == "nls") return Problem(name, NlsParams{});
  if (name == "ks") return Problem(name, KsParams{});
  if (name == "linear") return Problem(name, LinearParams{});
  throw ConfigError("unknown problem preset '" + name + "'");
}

/// Solve (I - c L) v = u in Fourier space.
inline CVec apply_implicit_solve(const Problem& problem, const CVec& u_hat,
                                 double c) {
  const std::size_t n = u_hat.size();
  const double len = problem.length();
  CVec out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx denom = 1.0 - c * problem.symbol(wavenumber(j, n, len));
    if (std::abs(denom) < 1e-14)
      throw SingularSolve("implicit solve singular at mode " + std::to_string(j));
    out[j] = u_hat[j] / denom;
  }
  return out;
}

inline SpectralField evaluate_explicit(const Problem& problem,
                                       const SpectralField& u) {
  return SpectralField::from_fourier(problem.length(),
                                     problem.explicit_rhs(u.fourier_values()));
}

/// Full right-hand side L u + N(u) in Fourier space.
inline CVec full_rhs(const Problem& problem, const CVec& u_hat) {
  CVec out = problem.explicit_rhs(u_hat);
  const auto lambda = problem.symbol_table(u_hat.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += lambda[j] * u_hat[j];
  return out;
}

/// Relative max-norm error at matching grid points; the coarser field is
/// spectrally interpolated onto the finer grid first.
inline double solution_error(const CVec& u_hat, const CVec& ref_hat) {
  const std::size_t n = std::max(u_hat.size(), ref_hat.size());
  const CVec a = ifft(resample_hat(u_hat, n));
  const CVec b = ifft(resample_hat(ref_hat, n));
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = std::abs(a[j] - b[j]);
    if (!std::isfinite(d)) return std::numeric_limits<double>::infinity();
    num = std::max(num, d);
    den = std::max(den, std::abs(b[j]));
  }
  return den > 0.0 ? num / den : num;
}

inline double solution_error(const SpectralField& u, const SpectralField& ref) {
  return solution_error(u.fourier_values(), ref.fourier_values());
}

/// Largest imaginary part in physical space; real problems must keep this
/// at round-off level.
inline double max_imaginary(const CVec& u_hat) {
  double m = 0.0;
  for (const auto& v : ifft(u_hat)) m = std::max(m, std::abs(v.imag()));
  return m;
}

}  // namespace pint
