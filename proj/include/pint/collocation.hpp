#pragma once

// Lobatto IIIA collocation, IMEX spectral deferred corrections and two-level
// multilevel SDC with a full approximation scheme (FAS) coupling.
//
// Sweeps use the node-to-zero form
//   U_i = U_0 + dt sum_j QI_ij (L U_j^new - L U_j^old)
//             + dt sum_j QE_ij (N U_j^new - N U_j^old)
//             + dt sum_j Q_ij F(U_j^old) + tau_i
// where QI is implicit Euler on the node spacings and QE its explicit shift.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "pint/errors.hpp"
#include "pint/problems.hpp"
#include "pint/spectral.hpp"

namespace pint {

using Matrix = std::vector<std::vector<double>>;

namespace detail {

/// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  // derivative from (1 - x^2) P_n' = n (P_{n-1} - x P_n), valid off +-1
  const double dp = std::abs(1.0 - x * x) < 1e-300
                        ? 0.5 * n * (n + 1.0) * std::pow(x, n + 1)
                        : n * (p0 - x * p1) / (1.0 - x * x);
  return {p1, dp};
}

inline void newton_fail(const char* what, int n) {
  throw ConvergenceError(std::string("Newton iteration for ") + what +
                         " nodes failed, n = " + std::to_string(n));
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int k) {
  std::vector<double> x(k), w(k);
  for (int i = 0; i < k; ++i) {
    double xi = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    bool done = false;
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(k, xi);
      const double dx = p / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) {
        done = true;
        break;
      }
    }
    if (!done) newton_fail("Gauss-Legendre", k);
    const auto [p, dp] = legendre(k, xi);
    x[k - 1 - i] = xi;
    w[k - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  return {x, w};
}

/// Lagrange basis polynomial ell_j of the node set evaluated at t.
inline double lagrange(const std::vector<double>& nodes, std::size_t j, double t) {
  double v = 1.0;
  for (std::size_t l = 0; l < nodes.size(); ++l)
    if (l != j) v *= (t - nodes[l]) / (nodes[j] - nodes[l]);
  return v;
}

}  // namespace detail

struct CollocationTable {
  std::size_t m = 0;
  std::vector<double> nodes;    // in [0, 1], endpoints included
  std::vector<double> weights;  // quadrature weights on [0, 1]
  Matrix Q;                     // Q[i][j] = int_0^{nodes[i]} ell_j
  Matrix QI;                    // implicit Euler, lower triangular
  Matrix QE;                    // explicit Euler, strictly lower triangular
};

/// Lobatto nodes from Newton's method on P'_{m-1}; Q by Gauss-Legendre
/// integration of the Lagrange basis.
inline CollocationTable lobatto_table(std::size_t m) {
  if (m < 2) throw std::invalid_argument("Lobatto rule needs m >= 2");
  const int deg = static_cast<int>(m) - 1;
  std::vector<double> x(m);
  x[0] = -1.0;
  x[m - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    double xi = -std::cos(std::numbers::pi * static_cast<double>(i) / deg);
    bool done = false;
    for (int it = 0; it < 100; ++it) {
      // q = P'_deg, q' from the Legendre differential equation
      const auto [p, dp] = detail::legendre(deg, xi);
      const double ddp = (2.0 * xi * dp - deg * (deg + 1.0) * p) / (1.0 - xi * xi);
      const double dx = dp / ddp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) {
        done = true;
        break;
      }
    }
    if (!done) detail::newton_fail("Lobatto", static_cast<int>(m));
    x[i] = xi;
  }

  CollocationTable t;
  t.m = m;
  t.nodes.resize(m);
  for (std::size_t i = 0; i < m; ++i) t.nodes[i] = 0.5 * (x[i] + 1.0);
  t.nodes[0] = 0.0;
  t.nodes[m - 1] = 1.0;

  const auto [gx, gw] = detail::gauss_legendre(static_cast<int>(m) + 2);
  t.Q.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 1; i < m; ++i) {
    const double b = t.nodes[i];
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t g = 0; g < gx.size(); ++g)
        s += gw[g] * detail::lagrange(t.nodes, j, 0.5 * b * (gx[g] + 1.0));
      t.Q[i][j] = 0.5 * b * s;
    }
  }
  t.weights = t.Q[m - 1];

  t.QI.assign(m, std::vector<double>(m, 0.0));
  t.QE.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 1; j <= i; ++j) {
      t.QI[i][j] = t.nodes[j] - t.nodes[j - 1];
      t.QE[i][j - 1] = t.nodes[j] - t.nodes[j - 1];
    }
  return t;
}

/// Lagrange interpolation from one node set to another: P[t][f] = ell_f(to[t]).
inline Matrix interpolation_matrix(const std::vector<double>& from,
                                   const std::vector<double>& to) {
  Matrix P(to.size(), std::vector<double>(from.size(), 0.0));
  for (std::size_t t = 0; t < to.size(); ++t)
    for (std::size_t f = 0; f < from.size(); ++f)
      P[t][f] = detail::lagrange(from, f, to[t]);
  return P;
}

/// One level of a space-time hierarchy: problem, grid size and node set.
class Level {
 public:
  Level(const Problem& problem, std::size_t n, CollocationTable table)
      : problem_(&problem), n_(n), table_(std::move(table)),
        lambda_(problem.symbol_table(n)) {
    if (!is_power_of_two(n) || n < 2)
      throw InvalidSize("level grid size must be a power of two >= 2");
  }

  const Problem& problem() const noexcept { return *problem_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return table_.m; }
  const CollocationTable& table() const noexcept { return table_; }
  const CVec& lambda() const noexcept { return lambda_; }

  CVec implicit_part(const CVec& u) const {
    CVec out(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = lambda_[j] * u[j];
    return out;
  }
  CVec explicit_part(const CVec& u) const { return problem_->explicit_rhs(u); }

  /// Solve (1 - c lambda) x = rhs in place.
  void implicit_solve(CVec& rhs, double c) const {
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx denom = 1.0 - c * lambda_[j];
      if (std::abs(denom) < 1e-14)
        throw SingularSolve("node solve singular at mode " + std::to_string(j));
      rhs[j] /= denom;
    }
  }

  /// Cost of one sweep: (m - 1) node solves with n log2 n work each.
  double sweep_cost() const {
    return static_cast<double>(table_.m - 1) * static_cast<double>(n_) *
           std::log2(static_cast<double>(n_));
  }

 private:
  const Problem* problem_;
  std::size_t n_;
  CollocationTable table_;
  CVec lambda_;
};

/// Node values and right-hand sides for one time step on one level.
struct SweepState {
  double dt = 0.0;
  std::vector<CVec> u;    // u[0] is the step's initial value
  std::vector<CVec> fi;   // L u
  std::vector<CVec> fe;   // N(u)
  std::vector<CVec> tau;  // FAS correction (node-to-zero form); empty if none
};

inline void evaluate_node(const Level& level, SweepState& s, std::size_t i) {
  s.fi[i] = level.implicit_part(s.u[i]);
  s.fe[i] = level.explicit_part(s.u[i]);
}

inline void evaluate_all(const Level& level, SweepState& s) {
  for (std::size_t i = 0; i < s.u.size(); ++i) evaluate_node(level, s, i);
}

/// Every node set to u0 (spread initial guess).
inline SweepState make_state(const Level& level, const CVec& u0, double dt) {
  if (u0.size() != level.n()) throw InvalidSize("initial value size mismatch");
  SweepState s;
  s.dt = dt;
  s.u.assign(level.m(), u0);
  s.fi.resize(level.m());
  s.fe.resize(level.m());
  evaluate_all(level, s);
  return s;
}

/// Replace the step's initial value and refresh its right-hand side.
inline void set_initial_value(const Level& level, SweepState& s, const CVec& u0) {
  s.u[0] = u0;
  evaluate_node(level, s, 0);
}

/// dt * sum_j Q_ij F_j at every node (node 0 gives zero).
inline std::vector<CVec> node_integrals(const Level& level, const SweepState& s) {
  const auto& Q = level.table().Q;
  const std::size_t m = level.m(), n = level.n();
  std::vector<CVec> out(m, CVec(n, cplx{0.0, 0.0}));
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double q = s.dt * Q[i][j];
      if (q == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) out[i][k] += q * (s.fi[j][k] + s.fe[j][k]);
    }
  return out;
}

/// One IMEX-SDC sweep in place.
inline void sdc_sweep(const Level& level, SweepState& s) {
  const auto& T = level.table();
  const std::size_t m = level.m(), n = level.n();
  const double dt = s.dt;
  const auto integrals = node_integrals(level, s);
  const std::vector<CVec> fi_old = s.fi, fe_old = s.fe;
  for (std::size_t i = 1; i < m; ++i) {
    CVec rhs(n);
    for (std::size_t k = 0; k < n; ++k) {
      cplx v = s.u[0][k] + integrals[i][k];
      if (!s.tau.empty()) v += s.tau[i][k];
      for (std::size_t j = 0; j < i; ++j) {
        if (T.QI[i][j] != 0.0) v += dt * T.QI[i][j] * (s.fi[j][k] - fi_old[j][k]);
        if (T.QE[i][j] != 0.0) v += dt * T.QE[i][j] * (s.fe[j][k] - fe_old[j][k]);
      }
      v -= dt * T.QI[i][i] * fi_old[i][k];
      rhs[k] = v;
    }
    level.implicit_solve(rhs, dt * T.QI[i][i]);
    s.u[i] = std::move(rhs);
    evaluate_node(level, s, i);
  }
}

/// max_i || U_0 + dt sum_j Q_ij F_j + tau_i - U_i ||_inf in physical space.
inline double sdc_residual(const Level& level, const SweepState& s) {
  const auto integrals = node_integrals(level, s);
  double r = 0.0;
  for (std::size_t i = 1; i < level.m(); ++i) {
    CVec d(level.n());
    for (std::size_t k = 0; k < level.n(); ++k) {
      d[k] = s.u[0][k] + integrals[i][k] - s.u[i][k];
      if (!s.tau.empty()) d[k] += s.tau[i][k];
    }
    const double ri = max_norm_of_hat(d);
    if (std::isnan(ri)) return ri;
    r = std::max(r, ri);
  }
  return r;
}

struct StepResult {
  CVec value;
  int iterations = 0;  // sweeps for SDC, V-cycles for MLSDC
  bool converged = false;
  std::vector<double> residuals;
  int fine_sweeps = 0;
  int coarse_sweeps = 0;
  double cost_units = 0.0;
};

inline StepResult sdc_solve_step(const Level& level, const CVec& u0, double dt,
                                 double tol, int max_sweeps) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  SweepState s = make_state(level, u0, dt);
  StepResult r;
  for (int k = 1; k <= max_sweeps; ++k) {
    sdc_sweep(level, s);
    r.iterations = k;
    r.fine_sweeps = k;
    r.residuals.push_back(sdc_residual(level, s));
    if (r.residuals.back() < tol) {
      r.converged = true;
      break;
    }
  }
  r.cost_units = r.fine_sweeps * level.sweep_cost();
  r.value = s.u.back();
  return r;
}

inline StepResult sdc_solve_step(const Problem& problem,
                                 const CollocationTable& table, const CVec& u0,
                                 double dt, double tol, int max_sweeps) {
  const Level level(problem, u0.size(), table);
  return sdc_solve_step(level, u0, dt, tol, max_sweeps);
}

/// Fine and coarse level with the node transfer matrices between them.
class TwoLevel {
 public:
  TwoLevel(const Level& fine, const Level& coarse)
      : fine_(&fine), coarse_(&coarse),
        restrict_time_(interpolation_matrix(fine.table().nodes,
                                            coarse.table().nodes)),
        interp_time_(interpolation_matrix(coarse.table().nodes,
                                          fine.table().nodes)) {
    if (coarse.n() > fine.n())
      throw InvalidTransfer("coarse grid larger than fine grid");
    if (coarse.m() > fine.m())
      throw InvalidTransfer("coarse level has more nodes than fine level");
  }

  const Level& fine() const noexcept { return *fine_; }
  const Level& coarse() const noexcept { return *coarse_; }

  /// Space-then-time restriction of a fine node vector.
  std::vector<CVec> restrict_nodes(const std::vector<CVec>& f) const {
    return transfer(f, restrict_time_, coarse_->n());
  }
  std::vector<CVec> interpolate_nodes(const std::vector<CVec>& c) const {
    return transfer(c, interp_time_, fine_->n());
  }

  CVec restrict_value(const CVec& v) const { return resample_hat(v, coarse_->n()); }
  CVec interpolate_value(const CVec& v) const { return resample_hat(v, fine_->n()); }

  /// Load the coarse state with the restricted fine state and the FAS term
  ///   tau = R(dt Q_f F_f) - dt Q_c F_c(R U_f).
  void restrict_with_fas(const SweepState& fine, SweepState& coarse) const {
    coarse.dt = fine.dt;
    coarse.u = restrict_nodes(fine.u);
    coarse.fi.resize(coarse_->m());
    coarse.fe.resize(coarse_->m());
    evaluate_all(*coarse_, coarse);
    const auto fine_int = restrict_nodes(node_integrals(*fine_, fine));
    const auto coarse_int = node_integrals(*coarse_, coarse);
    coarse.tau.assign(coarse_->m(), CVec(coarse_->n()));
    for (std::size_t i = 0; i < coarse_->m(); ++i)
      for (std::size_t k = 0; k < coarse_->n(); ++k)
        coarse.tau[i][k] = fine_int[i][k] - coarse_int[i][k];
    if (!fine.tau.empty()) {
      const auto rt = restrict_nodes(fine.tau);
      for (std::size_t i = 0; i < coarse_->m(); ++i)
        for (std::size_t k = 0; k < coarse_->n(); ++k) coarse.tau[i][k] += rt[i][k];
    }
  }

  /// U_f += I(U_c - U_c_before) at every node, then refresh fine F.
  void interpolate_correction(SweepState& fine, const std::vector<CVec>& before,
                              const SweepState& coarse) const {
    std::vector<CVec> delta(coarse_->m(), CVec(coarse_->n()));
    for (std::size_t i = 0; i < coarse_->m(); ++i)
      for (std::size_t k = 0; k < coarse_->n(); ++k)
        delta[i][k] = coarse.u[i][k] - before[i][k];
    const auto fd = interpolate_nodes(delta);
    for (std::size_t i = 0; i < fine_->m(); ++i)
      for (std::size_t k = 0; k < fine_->n(); ++k) fine.u[i][k] += fd[i][k];
    evaluate_all(*fine_, fine);
  }

 private:
  static std::vector<CVec> transfer(const std::vector<CVec>& v, const Matrix& P,
                                    std::size_t n_to) {
    std::vector<CVec> spatial(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) spatial[i] = resample_hat(v[i], n_to);
    std::vector<CVec> out(P.size(), CVec(n_to, cplx{0.0, 0.0}));
    for (std::size_t t = 0; t < P.size(); ++t)
      for (std::size_t f = 0; f < v.size(); ++f) {
        const double w = P[t][f];
        if (w == 0.0) continue;
        if (w == 1.0) {
          for (std::size_t k = 0; k < n_to; ++k) out[t][k] += spatial[f][k];
        } else {
          for (std::size_t k = 0; k < n_to; ++k) out[t][k] += w * spatial[f][k];
        }
      }
    return out;
  }

  const Level* fine_;
  const Level* coarse_;
  Matrix restrict_time_;
  Matrix interp_time_;
};

/// Two-level MLSDC. Each iteration: restrict with FAS, coarse sweep,
/// interpolate the coarse correction, fine sweep; stop on the fine residual.
inline StepResult mlsdc_solve_step(const TwoLevel& levels, const CVec& u0,
                                   double dt, double tol, int max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const Level& fine = levels.fine();
  const Level& coarse = levels.coarse();
  SweepState fs = make_state(fine, u0, dt);
  SweepState cs;
  StepResult r;
  for (int k = 1; k <= max_iters; ++k) {
    levels.restrict_with_fas(fs, cs);
    const std::vector<CVec> before = cs.u;
    sdc_sweep(coarse, cs);
    levels.interpolate_correction(fs, before, cs);
    sdc_sweep(fine, fs);
    r.iterations = k;
    r.fine_sweeps = k;
    r.coarse_sweeps = k;
    r.residuals.push_back(sdc_residual(fine, fs));
    if (r.residuals.back() < tol) {
      r.converged = true;
      break;
    }
  }
  r.cost_units = r.fine_sweeps * fine.sweep_cost() +
                 r.coarse_sweeps * coarse.sweep_cost();
  r.value = fs.u.back();
  return r;
}

inline StepResult mlsdc_solve_step(const Problem& problem,
                                   const CollocationTable& fine_table,
                                   const CollocationTable& coarse_table,
                                   const GridPair& grids, const CVec& u0,
                                   double dt, double tol, int max_iters) {
  const Level fine(problem, grids.fine, fine_table);
  const Level coarse(problem, grids.coarse, coarse_table);
  return mlsdc_solve_step(TwoLevel(fine, coarse), u0, dt, tol, max_iters);
}

struct SerialCollocationResult {
  CVec value;
  std::vector<int> iterations;  // per step
  bool converged = true;
  double cost_units = 0.0;
  int total_fine_sweeps = 0;
  int total_coarse_sweeps = 0;
};

/// n_steps SDC steps over [t0, t1].
inline SerialCollocationResult sdc_run(const Level& level, CVec u, double t0,
                                       double t1, int n_steps, double tol,
                                       int max_sweeps) {
  SerialCollocationResult out;
  const double dt = (t1 - t0) / n_steps;
  for (int p = 0; p < n_steps; ++p) {
    auto r = sdc_solve_step(level, u, dt, tol, max_sweeps);
    u = std::move(r.value);
    out.iterations.push_back(r.iterations);
    out.converged = out.converged && r.converged;
    out.cost_units += r.cost_units;
    out.total_fine_sweeps += r.fine_sweeps;
  }
  out.value = std::move(u);
  return out;
}

inline SerialCollocationResult mlsdc_run(const TwoLevel& levels, CVec u,
                                         double t0, double t1, int n_steps,
                                         double tol, int max_iters) {
  SerialCollocationResult out;
  const double dt = (t1 - t0) / n_steps;
  for (int p = 0; p < n_steps; ++p) {
    auto r = mlsdc_solve_step(levels, u, dt, tol, max_iters);
    u = std::move(r.value);
    out.iterations.push_back(r.iterations);
    out.converged = out.converged && r.converged;
    out.cost_units += r.cost_units;
    out.total_fine_sweeps += r.fine_sweeps;
    out.total_coarse_sweeps += r.coarse_sweeps;
  }
  out.value = std::move(u);
  return out;
}

}  // namespace pint
