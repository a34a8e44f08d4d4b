#pragma once

// High-resolution serial reference solutions at the problem's final time,
// certified by step halving and cached on disk.
//
// Cache layout: <cache>/<problem hash>/ref_<n>_<dt>.bin plus manifest.json.
// The cache directory comes from PINT_CACHE_DIR; without it only the
// in-process cache is used. Files are written to a temporary name and
// renamed, so concurrent writers may duplicate work but never leave a
// partial file behind.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include <json.hpp>

#include "pint/errors.hpp"
#include "pint/hash.hpp"
#include "pint/problems.hpp"
#include "pint/steppers.hpp"

namespace pint {

struct ReferenceSpec {
  std::size_t n;
  long steps;
  Scheme scheme = Scheme::erk4_krogstad;
};

inline constexpr double kReferenceCertifyTol = 1e-9;

/// Resolutions well beyond anything the bundled experiments use.
inline ReferenceSpec default_reference(const Problem& problem) {
  const double tf = problem.t_final();
  switch (problem.kind()) {
    case ProblemKind::adr:
      return {512, static_cast<long>(std::ceil(tf * 800.0))};
    case ProblemKind::nls:
      return {256, static_cast<long>(std::ceil(tf * 8192.0))};
    case ProblemKind::ks:
      return {512, static_cast<long>(std::ceil(tf * 128.0))};
    case ProblemKind::linear:
      return {64, static_cast<long>(std::ceil(tf * 256.0))};
  }
  return {256, 1024};
}

inline std::optional<std::filesystem::path> cache_directory() {
  const char* env = std::getenv("PINT_CACHE_DIR");
  if (!env || !*env) return std::nullopt;
  return std::filesystem::path(env);
}

namespace detail {

inline std::string dt_tag(double dt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", dt);
  return buf;
}

inline std::string bytes_of(const CVec& v) {
  return std::string(reinterpret_cast<const char*>(v.data()),
                     v.size() * sizeof(cplx));
}

inline std::filesystem::path temp_sibling(const std::filesystem::path& p) {
  static std::atomic<unsigned long> counter{0};
  std::ostringstream s;
  s << p.filename().string() << ".tmp." << ::getpid() << '.'
    << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.'
    << counter++;
  return p.parent_path() / s.str();
}

}  // namespace detail

/// Write bytes to path atomically (temporary file + rename).
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const auto tmp = detail::temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class ReferenceCache {
 public:
  static ReferenceCache& instance() {
    static ReferenceCache cache;
    return cache;
  }

  std::optional<CVec> load(const Problem& problem, const ReferenceSpec& spec) {
    const std::string key = memory_key(problem, spec);
    {
      std::lock_guard lock(mutex_);
      if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    auto dir = cache_directory();
    if (!dir) return std::nullopt;
    const auto file = file_path(*dir, problem, spec);
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (bytes.size() != spec.n * sizeof(cplx)) return std::nullopt;
    CVec v(spec.n);
    std::memcpy(v.data(), bytes.data(), bytes.size());
    if (auto sum = manifest_checksum(*dir, problem, file.filename().string());
        sum && *sum != hex64(fnv1a64(bytes)))
      return std::nullopt;
    std::lock_guard lock(mutex_);
    memory_[key] = v;
    return v;
  }

  void store(const Problem& problem, const ReferenceSpec& spec, const CVec& v) {
    {
      std::lock_guard lock(mutex_);
      memory_[memory_key(problem, spec)] = v;
    }
    auto dir = cache_directory();
    if (!dir) return;
    const auto file = file_path(*dir, problem, spec);
    const std::string bytes = detail::bytes_of(v);
    atomic_write(file, bytes);

    std::lock_guard lock(mutex_);
    const auto manifest_path = file.parent_path() / "manifest.json";
    nlohmann::json manifest = read_manifest(manifest_path);
    manifest["problem"] = problem.to_json();
    manifest["problem"].erase("name");
    manifest["entries"][file.filename().string()] = {
        {"n", spec.n},
        {"steps", spec.steps},
        {"dt", problem.t_final() / static_cast<double>(spec.steps)},
        {"scheme", to_string(spec.scheme)},
        {"checksum", hex64(fnv1a64(bytes))}};
    atomic_write(manifest_path, manifest.dump(2) + "\n");
  }

  void clear_memory() {
    std::lock_guard lock(mutex_);
    memory_.clear();
  }

  static std::filesystem::path file_path(const std::filesystem::path& dir,
                                         const Problem& problem,
                                         const ReferenceSpec& spec) {
    const double dt = problem.t_final() / static_cast<double>(spec.steps);
    std::string name = "ref_" + std::to_string(spec.n) + "_" +
                       detail::dt_tag(dt);
    if (spec.scheme != Scheme::erk4_krogstad) name += "_" + to_string(spec.scheme);
    return dir / problem.hash() / (name + ".bin");
  }

 private:
  static std::string memory_key(const Problem& problem,
                                const ReferenceSpec& spec) {
    return problem.hash() + ":" + std::to_string(spec.n) + ":" +
           std::to_string(spec.steps) + ":" + to_string(spec.scheme);
  }

  static nlohmann::json read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      return nlohmann::json::object();
    }
  }

  std::optional<std::string> manifest_checksum(const std::filesystem::path& dir,
                                               const Problem& problem,
                                               const std::string& file) {
    std::lock_guard lock(mutex_);
    const auto m = read_manifest(dir / problem.hash() / "manifest.json");
    if (!m.contains("entries") || !m["entries"].contains(file))
      return std::nullopt;
    return m["entries"][file].value("checksum", std::string{});
  }

  std::mutex mutex_;
  std::map<std::string, CVec> memory_;
};

/// Final-time solution on spec.n points with spec.steps steps. Refuses to
/// certify (ConvergenceError) unless halving the step changes the result by
/// less than kReferenceCertifyTol in relative max-norm.
inline CVec reference_solution(const Problem& problem, const ReferenceSpec& spec) {
  auto& cache = ReferenceCache::instance();
  if (auto hit = cache.load(problem, spec)) return *hit;
  const CVec u0 = problem.initial_hat(spec.n);
  const double tf = problem.t_final();
  const CVec coarse = integrate(spec.scheme, problem, u0, 0.0, tf, spec.steps);
  const CVec fine = integrate(spec.scheme, problem, u0, 0.0, tf, 2 * spec.steps);
  const double diff = solution_error(coarse, fine);
  if (!(diff < kReferenceCertifyTol)) {
    std::ostringstream msg;
    msg << "reference for " << problem.name()
        << " not certified: step halving changes result by " << diff;
    throw ConvergenceError(msg.str());
  }
  cache.store(problem, spec, coarse);
  return coarse;
}

inline CVec reference_solution(const Problem& problem) {
  return reference_solution(problem, default_reference(problem));
}

}  // namespace pint
