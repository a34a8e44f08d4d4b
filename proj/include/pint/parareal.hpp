#pragma once

// Parareal with a deterministic serial emulation and a threaded executor
// that reproduces the emulation bitwise.
//
//   U_{p+1}^k = G(U_p^k) + F(U_p^{k-1}) - G(U_p^{k-1})
//
// Convergence is checked on the interface values in relative max-norm:
// max_p |U_p^k - U_p^{k-1}| / max_p |U_p^k| < tol, or k = N_P (after N_P
// iterations every slice equals the serial fine solution).

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pint/errors.hpp"
#include "pint/problems.hpp"
#include "pint/steppers.hpp"

namespace pint {

struct PropagatorSpec {
  Scheme scheme = Scheme::imex_rk2;
  long steps = 1;  // per slice
};

/// Norm of the interface increment: max-norm or root-mean-square over grid
/// points and slices, both relative to the same norm of the new iterate.
enum class IncrementNorm { max, rms };

inline std::string to_string(IncrementNorm n) {
  return n == IncrementNorm::max ? "max" : "rms";
}

inline IncrementNorm increment_norm_from_string(const std::string& s) {
  if (s == "max") return IncrementNorm::max;
  if (s == "rms") return IncrementNorm::rms;
  throw ConfigError("unknown increment norm '" + s + "'");
}

struct PararealConfig {
  int n_slices = 1;
  PropagatorSpec fine;
  PropagatorSpec coarse;
  double tol = 1e-9;
  int max_k = 0;  // 0 means n_slices
  bool freeze_out = false;
  IncrementNorm norm = IncrementNorm::max;

  void validate() const {
    if (n_slices < 1) throw ConfigError("parareal: N_P must be >= 1");
    if (fine.steps < 1 || coarse.steps < 1)
      throw ConfigError("parareal: step counts must be >= 1");
    if (fine.steps < coarse.steps)
      throw ConfigError("parareal: N_F must be >= N_G");
    if (tol < 0.0) throw ConfigError("parareal: tol must be >= 0");
    if (max_k < 0) throw ConfigError("parareal: max_k must be >= 0");
  }
  int iteration_cap() const { return max_k > 0 ? max_k : n_slices; }

  /// Coarse-to-fine cost ratio from the stepper cost units.
  double alpha() const {
    return static_cast<double>(coarse.steps * stepper_spec(coarse.scheme).cost_units) /
           static_cast<double>(fine.steps * stepper_spec(fine.scheme).cost_units);
  }
};

struct PinTResult {
  /// iterates[k][p]: interface value at the start of slice p (p = N_P is the
  /// final time) after iteration k; k = 0 is the coarse predictor.
  std::vector<std::vector<CVec>> iterates;
  std::vector<double> increments;  // one per iteration
  std::vector<int> slice_iterations;
  int K = 0;
  bool converged = false;
  double fine_cost_units = 0.0;
  double coarse_cost_units = 0.0;
  long messages = 0;

  const CVec& final_value() const { return iterates.back().back(); }
};

namespace detail {

/// Increment over interfaces [first, now.size()) relative to the new values;
/// NaN if any entry is not finite.
inline double relative_increment(const std::vector<CVec>& now,
                                 const std::vector<CVec>& before,
                                 std::size_t first,
                                 IncrementNorm norm = IncrementNorm::max) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double num = 0.0, den = 0.0;
  for (std::size_t p = first; p < now.size(); ++p) {
    CVec d(now[p].size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = now[p][j] - before[p][j];
    const CVec dx = ifft(std::move(d));
    const CVec ux = ifft(now[p]);
    for (std::size_t j = 0; j < dx.size(); ++j) {
      const double a = std::abs(dx[j]), b = std::abs(ux[j]);
      if (!std::isfinite(a) || !std::isfinite(b)) return nan;
      if (norm == IncrementNorm::max) {
        num = std::max(num, a);
        den = std::max(den, b);
      } else {
        num += a * a;
        den += b * b;
      }
    }
  }
  if (norm == IncrementNorm::rms) {
    num = std::sqrt(num);
    den = std::sqrt(den);
  }
  return den > 0.0 ? num / den : num;
}

inline void add_correction(CVec& out, const CVec& g, const CVec& f,
                           const CVec& g_old) {
  out.resize(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = g[j] + f[j] - g_old[j];
}

}  // namespace detail

/// Serial emulation. Deterministic.
inline PinTResult parareal_run(const Problem& problem, const PararealConfig& cfg,
                               const CVec& u0, double t0, double t1) {
  cfg.validate();
  if (!(t1 > t0)) throw std::invalid_argument("parareal needs t1 > t0");
  const int np = cfg.n_slices;
  const double slice = (t1 - t0) / np;
  const std::size_t n = u0.size();
  const Stepper fine(cfg.fine.scheme, problem, n,
                     slice / static_cast<double>(cfg.fine.steps));
  const Stepper coarse(cfg.coarse.scheme, problem, n,
                       slice / static_cast<double>(cfg.coarse.steps));
  const double fine_cost = static_cast<double>(cfg.fine.steps) * fine.spec().cost_units;
  const double coarse_cost =
      static_cast<double>(cfg.coarse.steps) * coarse.spec().cost_units;

  PinTResult r;
  r.slice_iterations.assign(np, 0);
  std::vector<CVec> U(np + 1);
  U[0] = u0;
  std::vector<CVec> g_old(np);
  for (int p = 0; p < np; ++p) {
    g_old[p] = integrate(coarse, U[p], cfg.coarse.steps);
    U[p + 1] = g_old[p];
  }
  r.coarse_cost_units += np * coarse_cost;
  r.iterates.push_back(U);

  std::vector<bool> frozen(np, false);
  const int cap = cfg.iteration_cap();
  for (int k = 1; k <= cap; ++k) {
    std::vector<CVec> F(np);
    for (int p = 0; p < np; ++p) {
      if (frozen[p]) continue;
      F[p] = integrate(fine, U[p], cfg.fine.steps);
      r.fine_cost_units += fine_cost;
      r.slice_iterations[p] = k;
    }
    std::vector<CVec> Un(np + 1);
    Un[0] = u0;
    for (int p = 0; p < np; ++p) {
      if (frozen[p]) {
        Un[p + 1] = U[p + 1];
        continue;
      }
      CVec g = integrate(coarse, Un[p], cfg.coarse.steps);
      r.coarse_cost_units += coarse_cost;
      detail::add_correction(Un[p + 1], g, F[p], g_old[p]);
      g_old[p] = std::move(g);
      ++r.messages;
    }
    const double inc = detail::relative_increment(Un, U, 1, cfg.norm);
    if (cfg.freeze_out) {
      // a slice freezes once its own increment is below tol and every
      // earlier slice is frozen
      for (int p = 0; p < np; ++p) {
        if (frozen[p]) continue;
        if (p > 0 && !frozen[p - 1]) break;
        std::vector<CVec> a{Un[p + 1]}, b{U[p + 1]};
        const double ip = detail::relative_increment(a, b, 0, cfg.norm);
        if (ip < cfg.tol || p < k) frozen[p] = true; else break;
      }
    }
    U = std::move(Un);
    r.iterates.push_back(U);
    r.increments.push_back(inc);
    r.K = k;
    if (inc < cfg.tol || k >= np) {
      r.converged = std::isfinite(inc);
      break;
    }
    if (cfg.freeze_out && frozen.back()) {
      r.converged = true;
      break;
    }
  }
  return r;
}

/// True iff after k iterations the first k slices match the serial fine
/// solution to abs_tol (relative max-norm), for every k.
inline bool parareal_exactness_check(const PinTResult& result,
                                     const std::vector<CVec>& serial_fine,
                                     double tol = 1e-12) {
  const int np = static_cast<int>(serial_fine.size()) - 1;
  if (static_cast<int>(result.iterates.size()) < np + 1) return false;
  for (int k = 1; k <= np; ++k)
    for (int p = 1; p <= k; ++p)
      if (!(solution_error(result.iterates[k][p], serial_fine[p]) <= tol))
        return false;
  return true;
}

/// Interface values of the serial fine propagator (size N_P + 1).
inline std::vector<CVec> serial_fine_interfaces(const Problem& problem,
                                                const PararealConfig& cfg,
                                                const CVec& u0, double t0,
                                                double t1) {
  const double slice = (t1 - t0) / cfg.n_slices;
  const Stepper fine(cfg.fine.scheme, problem, u0.size(),
                     slice / static_cast<double>(cfg.fine.steps));
  std::vector<CVec> out{u0};
  for (int p = 0; p < cfg.n_slices; ++p)
    out.push_back(integrate(fine, out.back(), cfg.fine.steps));
  return out;
}

// ---------------------------------------------------------------------------
// threaded executor

struct PhaseTiming {
  std::string phase;  // fine, coarse, wait
  int slice;
  int iteration;
  double seconds;
};

struct BenchResult {
  PinTResult result;
  std::vector<PhaseTiming> timings;
  double wall_seconds = 0.0;
  int threads = 1;
};

namespace detail {

/// Single-producer single-consumer queue of interface values.
class Channel {
 public:
  void send(CVec v) {
    {
      std::lock_guard lock(m_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  /// Blocks; empty optional if the run was aborted.
  std::optional<CVec> receive(const std::atomic<bool>& abort) {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return !q_.empty() || abort.load(); });
    if (q_.empty()) return std::nullopt;
    CVec v = std::move(q_.front());
    q_.pop_front();
    return v;
  }
  void wake() { cv_.notify_all(); }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<CVec> q_;
};

struct Aborted {};

}  // namespace detail

/// One worker per contiguous block of slices; interface values travel
/// forward through channels. Values are bitwise identical to parareal_run.
inline BenchResult parareal_bench(const Problem& problem, const PararealConfig& cfg,
                                  const CVec& u0, double t0, double t1,
                                  int n_threads) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  if (n_threads < 1) throw std::invalid_argument("n_threads must be >= 1");
  if (cfg.freeze_out)
    throw ConfigError("threaded bench does not support freeze_out");
  const int np = cfg.n_slices;
  const int nw = std::min(n_threads, np);
  const double slice = (t1 - t0) / np;
  const std::size_t n = u0.size();
  const Stepper fine(cfg.fine.scheme, problem, n,
                     slice / static_cast<double>(cfg.fine.steps));
  const Stepper coarse(cfg.coarse.scheme, problem, n,
                       slice / static_cast<double>(cfg.coarse.steps));
  const int cap = cfg.iteration_cap();

  std::vector<int> first(nw + 1);
  for (int w = 0; w <= nw; ++w) first[w] = static_cast<int>((long)w * np / nw);

  // shared per-iteration buffers; each entry written by exactly one worker
  std::vector<std::vector<CVec>> iterates(1, std::vector<CVec>(np + 1));
  iterates.reserve(cap + 1);
  iterates[0][0] = u0;
  std::vector<double> increments;
  std::vector<std::vector<PhaseTiming>> timings(nw);
  std::vector<detail::Channel> channels(nw);  // channel w feeds worker w
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  bool stop = false;
  int K = 0;
  bool converged = false;

  auto on_iteration = [&]() noexcept {
    if (abort.load()) {
      stop = true;
      return;
    }
    const int k = static_cast<int>(iterates.size()) - 1;
    if (k == 0) {
      iterates.emplace_back(np + 1);
      return;
    }
    // the global reduction, done in the same order as the emulation
    const double inc =
        detail::relative_increment(iterates[k], iterates[k - 1], 1, cfg.norm);
    increments.push_back(inc);
    K = k;
    if (inc < cfg.tol || k >= np) {
      converged = std::isfinite(inc);
      stop = true;
    } else if (k >= cap) {
      stop = true;
    } else {
      iterates.emplace_back(np + 1);
    }
  };
  std::barrier sync(nw, on_iteration);

  auto worker = [&](int w) {
    const int lo = first[w], hi = first[w + 1];
    auto& log = timings[w];
    auto timed = [&](const char* phase, int p, int k, auto&& fn) {
      const auto a = clock::now();
      fn();
      log.push_back({phase, p, k,
                     std::chrono::duration<double>(clock::now() - a).count()});
    };
    auto receive_start = [&](int k) -> CVec {
      if (w == 0) return u0;
      std::optional<CVec> v;
      timed("wait", lo, k, [&] { v = channels[w].receive(abort); });
      if (!v) throw detail::Aborted{};
      return std::move(*v);
    };
    try {
      std::vector<CVec> g_old(hi - lo);
      // predictor
      {
        CVec u = receive_start(0);
        iterates[0][lo] = u;
        for (int p = lo; p < hi; ++p) {
          timed("coarse", p, 0, [&] { u = integrate(coarse, u, cfg.coarse.steps); });
          g_old[p - lo] = u;
          iterates[0][p + 1] = u;
        }
        if (w + 1 < nw) channels[w + 1].send(u);
      }
      sync.arrive_and_wait();
      for (int k = 1; !stop; ++k) {
        const auto& prev = iterates[k - 1];
        auto& cur = iterates[k];
        std::vector<CVec> F(hi - lo);
        for (int p = lo; p < hi; ++p)
          timed("fine", p, k, [&] { F[p - lo] = integrate(fine, prev[p], cfg.fine.steps); });
        CVec u = receive_start(k);
        cur[lo] = u;
        for (int p = lo; p < hi; ++p) {
          CVec g;
          timed("coarse", p, k, [&] { g = integrate(coarse, u, cfg.coarse.steps); });
          detail::add_correction(u, g, F[p - lo], g_old[p - lo]);
          g_old[p - lo] = std::move(g);
          cur[p + 1] = u;
        }
        if (w + 1 < nw) channels[w + 1].send(u);
        sync.arrive_and_wait();
      }
    } catch (const detail::Aborted&) {
      sync.arrive_and_drop();
    } catch (...) {
      {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
      abort = true;
      for (auto& c : channels) c.wake();
      sync.arrive_and_drop();
    }
  };

  const auto start = clock::now();
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker, w);
  }
  BenchResult out;
  out.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("parareal worker failed: ") + e.what());
    }
  }
  out.threads = nw;
  auto& r = out.result;
  r.iterates = std::move(iterates);
  r.increments = std::move(increments);
  r.K = K;
  r.converged = converged;
  r.slice_iterations.assign(np, K);
  r.fine_cost_units = static_cast<double>(K) * np * cfg.fine.steps *
                      fine.spec().cost_units;
  r.coarse_cost_units = static_cast<double>(K + 1) * np * cfg.coarse.steps *
                        coarse.spec().cost_units;
  r.messages = static_cast<long>(K) * np;
  for (auto& log : timings)
    out.timings.insert(out.timings.end(), log.begin(), log.end());
  return out;
}

}  // namespace pint
