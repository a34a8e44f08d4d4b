#pragma once

// Subcommands of the pintlab tool. Each returns a process exit code:
//   0 ok, 1 audit FLAG, 2 config error (nothing written), 3 numerical failure
// (a diagnostic JSON is written instead of the normal outputs).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pint/audit.hpp"
#include "pint/config.hpp"
#include "pint/experiment.hpp"
#include "pint/parareal.hpp"
#include "pint/reference.hpp"

namespace pint {

enum ExitCode : int { kExitOk = 0, kExitFlag = 1, kExitConfig = 2, kExitNumerical = 3 };

struct CliOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = "out";
  int threads = 0;                   // 0: command default
  std::vector<std::string> formats;  // empty: from the config
  std::vector<std::string> overrides;
  std::ostream* log = &std::cerr;
};

inline nlohmann::json environment_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return {{"cores", std::thread::hardware_concurrency()}, {"timestamp", buf}};
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline std::vector<std::string> output_formats(const CliOptions& o,
                                               const std::vector<std::string>& fallback) {
  const auto& f = o.formats.empty() ? fallback : o.formats;
  for (const auto& x : f)
    if (x != "json" && x != "csv" && x != "md")
      throw ConfigError("unknown output format '" + x + "'");
  return f;
}

inline bool wants(const std::vector<std::string>& f, const char* what) {
  return std::find(f.begin(), f.end(), what) != f.end();
}

inline std::string run_markdown(const RunOutcome& o) {
  std::ostringstream s;
  s << "# Run: " << o.config.name << "\n\n";
  s << "- problem: " << o.config.preset << ", n = " << o.config.n << "\n";
  s << "- method: " << to_string(o.config.method) << "\n";
  s << "- error (relative max-norm at T_F): " << fmt_num(o.error) << "\n";
  s << "- iterations: " << o.iterations << "\n";
  for (const auto& sp : o.speedups)
    s << "- speedup " << fmt_num(sp["value"].get<double>()) << " (" << sp["provenance"].get<std::string>()
      << ", " << sp["formula"].get<std::string>() << ", vs " << sp["baseline"].get<std::string>()
      << ")\n";
  return s.str();
}

inline int write_diagnostic(const CliOptions& o, const std::string& name,
                            const nlohmann::json& config, const std::string& what,
                            const nlohmann::json& partial = nullptr) {
  nlohmann::json d = {{"schema", 1},
                      {"kind", "diagnostic"},
                      {"name", name},
                      {"config", config},
                      {"failure", what},
                      {"environment", environment_stamp()}};
  if (!partial.is_null()) d["partial_results"] = partial;
  atomic_write(o.out_dir / (name + ".diagnostic.json"), dump_json(d));
  *o.log << "numerical failure: " << what << "\n";
  return kExitNumerical;
}

/// Runs `body`, mapping exceptions onto exit codes.
template <class Body>
int guarded_command(const CliOptions& o, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    *o.log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run

inline nlohmann::json run_record(const RunOutcome& o) {
  return {{"schema", 1},
          {"kind", "run"},
          {"name", o.config.name},
          {"config", o.config.to_json()},
          {"config_hash", o.config.hash()},
          {"results", o.results},
          {"converged", o.converged},
          {"environment", environment_stamp()}};
}

inline int cmd_run(const CliOptions& o) {
  return detail::guarded_command(o, [&] {
    const ExperimentConfig c = load_experiment(o.config, o.overrides);
    const auto formats = detail::output_formats(o, c.formats);
    RunOutcome out;
    try {
      out = execute(c);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      return detail::write_diagnostic(o, c.name, c.to_json(), e.what());
    }
    if (!out.failure.empty())
      return detail::write_diagnostic(o, c.name, c.to_json(), out.failure, out.results);
    if (detail::wants(formats, "json"))
      atomic_write(o.out_dir / (c.name + ".json"), dump_json(run_record(out)));
    if (detail::wants(formats, "csv")) {
      atomic_write(o.out_dir / (c.name + ".convergence.csv"), out.convergence.to_string());
      atomic_write(o.out_dir / (c.name + ".solution.csv"), out.solution.to_string());
    }
    if (detail::wants(formats, "md"))
      atomic_write(o.out_dir / (c.name + ".md"), detail::run_markdown(out));
    *o.log << c.name << ": error " << fmt_num(out.error) << ", iterations " << out.iterations;
    if (!out.speedups.empty())
      *o.log << ", speedup " << fmt_num(out.speedups.front()["value"].get<double>()) << " ("
             << out.speedups.front()["provenance"].get<std::string>() << ")";
    *o.log << "\n";
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------------------
// bench

struct BenchOutcome {
  nlohmann::json record;
  CsvTable timings;
  bool bitwise_equal = false;
  double measured = 0.0;
  double theory = 0.0;
};

/// Threaded Parareal against a timed serial fine run of the same config.
inline BenchOutcome run_bench(const ExperimentConfig& c, int threads) {
  if (c.method != MethodKind::parareal) throw ConfigError("bench needs method.kind = \"parareal\"");
  if (threads < 1) throw ConfigError("--threads must be >= 1");
  using clock = std::chrono::steady_clock;
  const Problem problem = c.problem();
  const CVec u0 = problem.initial_hat(c.n);
  const double tf = problem.t_final();
  const auto& pc = c.parareal;

  const auto t0 = clock::now();
  const CVec serial = integrate(pc.fine.scheme, problem, u0, 0.0, tf,
                                static_cast<long>(pc.n_slices) * pc.fine.steps);
  const double t_serial = std::chrono::duration<double>(clock::now() - t0).count();
  (void)serial;

  const BenchResult b = parareal_bench(problem, pc, u0, 0.0, tf, threads);
  const PinTResult emu = parareal_run(problem, pc, u0, 0.0, tf);
  bool same = emu.K == b.result.K && emu.iterates.size() == b.result.iterates.size();
  for (std::size_t k = 0; same && k < emu.iterates.size(); ++k)
    for (std::size_t p = 0; same && p < emu.iterates[k].size(); ++p)
      same = emu.iterates[k][p].size() == b.result.iterates[k][p].size() &&
             std::memcmp(emu.iterates[k][p].data(), b.result.iterates[k][p].data(),
                         emu.iterates[k][p].size() * sizeof(cplx)) == 0;

  BenchOutcome out;
  out.bitwise_equal = same;
  out.timings.columns = {"phase", "slice", "iteration", "seconds"};
  double wait = 0.0;
  for (const auto& t : b.timings) {
    out.timings.rows.push_back(
        {t.phase, std::to_string(t.slice), std::to_string(t.iteration), fmt_num(t.seconds)});
    if (t.phase == "wait") wait += t.seconds;
  }
  const PararealSpeedupInputs in{static_cast<double>(pc.n_slices), pc.alpha(),
                                 static_cast<double>(b.result.K)};
  out.theory = parareal_theoretical_speedup(in);
  out.measured = measured_speedup(t_serial, b.wall_seconds);
  auto theory = speedup_record(out.theory, in);
  theory["baseline"] = "serial fine propagator";
  auto measured = measured_record(t_serial, b.wall_seconds);
  measured["baseline"] = "serial fine run, timed";
  const CVec reference = reference_solution(problem);
  out.record = {{"schema", 1},
                {"kind", "bench"},
                {"name", c.name},
                {"config", c.to_json()},
                {"config_hash", c.hash()},
                {"threads", threads},
                {"environment", environment_stamp()},
                {"results",
                 {{"K", b.result.K},
                  {"converged", b.result.converged},
                  {"error", json_num(solution_error(b.result.final_value(), reference))},
                  {"bitwise_equal_to_emulation", same},
                  {"wait_seconds", wait},
                  {"t_serial", t_serial},
                  {"t_parallel", b.wall_seconds}}},
                {"speedup", {{"measured", measured}, {"theory", theory}}}};
  return out;
}

inline int cmd_bench(const CliOptions& o) {
  return detail::guarded_command(o, [&] {
    const ExperimentConfig c = load_experiment(o.config, o.overrides);
    const int threads = o.threads > 0 ? o.threads : 4;
    if (c.method != MethodKind::parareal)
      throw ConfigError("bench needs method.kind = \"parareal\"");
    BenchOutcome b;
    try {
      b = run_bench(c, threads);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      return detail::write_diagnostic(o, c.name, c.to_json(), std::string("worker failure: ") + e.what());
    }
    atomic_write(o.out_dir / (c.name + ".bench.json"), dump_json(b.record));
    atomic_write(o.out_dir / (c.name + ".timings.csv"), b.timings.to_string());
    *o.log << c.name << ": measured speedup " << fmt_num(b.measured) << " on " << threads
           << " threads, model " << fmt_num(b.theory)
           << (b.bitwise_equal ? "" : " (values differ from emulation)") << "\n";
    return static_cast<int>(b.bitwise_equal ? kExitOk : kExitNumerical);
  });
}

// ---------------------------------------------------------------------------
// sweep

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{"value",   "iterations",     "achieved_error",
                                             "S_theory", "S_theory_model", "S_measured",
                                             "efficiency", "error"};
  return cols;
}

inline int cmd_sweep(const CliOptions& o, std::optional<SweepSpec> spec = std::nullopt) {
  return detail::guarded_command(o, [&] {
    toml::table base = load_toml(o.config);
    for (const auto& ov : o.overrides) apply_override(base, ov);
    const nlohmann::json base_json = toml_to_json(base);
    if (!spec) spec = sweep_from_json(base_json);
    if (!spec) throw ConfigError("no sweep given: add a [sweep] table or --param/--values");
    if (spec->values.empty()) throw ConfigError("sweep has no values");
    ExperimentConfig base_cfg = experiment_from_json(base_json);
    const auto formats = detail::output_formats(o, base_cfg.formats);

    CsvTable table{sweep_columns(), {}};
    nlohmann::json rows = nlohmann::json::array();
    int ok = 0;
    for (double v : spec->values) {
      std::vector<std::string> row(sweep_columns().size());
      row[0] = fmt_num(v);
      nlohmann::json jr = {{"value", v}};
      try {
        const ExperimentConfig c = sweep_row(base, spec->parameter, v);
        const RunOutcome out = execute(c);
        row[1] = std::to_string(out.iterations);
        row[2] = fmt_num(out.error);
        jr["iterations"] = out.iterations;
        jr["achieved_error"] = json_num(out.error);
        jr["config_hash"] = c.hash();
        if (!out.speedups.empty()) {
          const auto& sp = out.speedups.front();
          row[3] = fmt_num(sp["value"].get<double>());
          row[4] = sp["formula"].get<std::string>();
          row[6] = fmt_num(sp["efficiency"].get<double>());
          jr["S_theory"] = sp;
        }
        if (o.threads > 0 && c.method == MethodKind::parareal) {
          const auto b = run_bench(c, o.threads);
          row[5] = fmt_num(b.measured);
          jr["S_measured"] = b.record["speedup"]["measured"];
        }
        if (!out.failure.empty()) {
          row[7] = out.failure;
          jr["error"] = out.failure;
        } else {
          ++ok;
        }
      } catch (const std::exception& e) {
        row[7] = e.what();
        jr["error"] = e.what();
      }
      table.rows.push_back(row);
      rows.push_back(jr);
    }
    const std::string name = base_cfg.name;
    if (detail::wants(formats, "csv"))
      atomic_write(o.out_dir / (name + ".sweep.csv"), table.to_string());
    if (detail::wants(formats, "json"))
      atomic_write(o.out_dir / (name + ".sweep.json"),
                   dump_json({{"schema", 1},
                              {"kind", "sweep"},
                              {"name", name},
                              {"config", base_cfg.to_json()},
                              {"parameter", spec->parameter},
                              {"rows", rows},
                              {"environment", environment_stamp()}}));
    *o.log << name << ": " << ok << " of " << spec->values.size() << " sweep rows succeeded\n";
    return static_cast<int>(ok > 0 ? kExitOk : kExitNumerical);
  });
}

// ---------------------------------------------------------------------------
// audit

inline int cmd_audit(const CliOptions& o) {
  return detail::guarded_command(o, [&] {
    const AuditConfig a = load_audit(o.config, o.overrides);
    const auto formats = detail::output_formats(o, {"json", "md"});
    const AuditReport r = run_full_audit(a);
    if (detail::wants(formats, "json"))
      atomic_write(o.out_dir / (a.name + ".audit.json"), dump_json(r.to_json()));
    if (detail::wants(formats, "md"))
      atomic_write(o.out_dir / (a.name + ".audit.md"), r.to_markdown());
    if (detail::wants(formats, "csv")) {
      CsvTable t{{"way", "title", "category", "metric", "value", "threshold", "verdict"}, {}};
      for (const auto& e : r.entries)
        t.rows.push_back({std::to_string(e.way), way_title(e.way), way_category(e.way), e.metric,
                          e.value ? fmt_num(*e.value) : "", e.threshold ? fmt_num(*e.threshold) : "",
                          to_string(e.verdict)});
      atomic_write(o.out_dir / (a.name + ".audit.csv"), t.to_string());
    }
    const auto flags = r.flagged_ways();
    *o.log << a.name << ": " << flags.size() << " FLAG";
    for (std::size_t i = 0; i < flags.size(); ++i) *o.log << (i ? ", " : " (ways ") << flags[i];
    *o.log << (flags.empty() ? "" : ")") << "\n";
    return static_cast<int>(flags.empty() ? kExitOk : kExitFlag);
  });
}

// ---------------------------------------------------------------------------
// plot

struct PlotSpec {
  std::vector<std::filesystem::path> csv;
  std::string x;
  std::vector<std::string> y;
  bool log_x = false;
  bool log_y = false;
  std::string title;
  std::filesystem::path output = "plot.svg";
};

/// Header plus rows; double quotes and embedded commas handled.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cell += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += ch;
      }
    }
    cells.push_back(cell);
    out.push_back(cells);
  }
  if (out.empty()) throw ConfigError(path.string() + " is empty");
  return out;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

inline std::string svg_escape(const std::string& s) {
  std::string r;
  for (char ch : s) {
    switch (ch) {
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '&': r += "&amp;"; break;
      case '"': r += "&quot;"; break;
      default: r += ch;
    }
  }
  return r;
}

inline std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto f = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  auto g = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << svg_escape(spec.title) << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
    << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double a = x0 + (x1 - x0) * i / 4.0, b = y0 + (y1 - y0) * i / 4.0;
    const double xv = spec.log_x ? std::pow(10.0, a) : a;
    const double yv = spec.log_y ? std::pow(10.0, b) : b;
    s << "<text x=\"" << f(px(xv)) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">" << g(xv) << "</text>\n";
    s << "<text x=\"" << L - 6 << "\" y=\"" << f(py(yv) + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << g(yv) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\" font-size=\"13\">" << svg_escape(spec.x)
    << (spec.log_x ? " (log)" : "") << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = colors[i % 6];
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto [x, y] = series[i].points[k];
      s << (k ? " " : "") << f(px(x)) << "," << f(py(y));
    }
    s << "\"/>\n";
    s << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * i << "\" font-size=\"12\" fill=\"" << c
      << "\">" << svg_escape(series[i].label) << (spec.log_y ? " (log)" : "") << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline int cmd_plot(const PlotSpec& spec, std::ostream& log = std::cerr) {
  try {
    if (spec.csv.empty()) throw ConfigError("plot needs at least one CSV file");
    if (spec.x.empty() || spec.y.empty()) throw ConfigError("plot needs --x and --y columns");
    std::vector<Series> series;
    for (const auto& path : spec.csv) {
      const auto rows = read_csv(path);
      const auto& head = rows.front();
      auto col = [&](const std::string& name) {
        const auto it = std::find(head.begin(), head.end(), name);
        if (it == head.end()) throw ConfigError(path.string() + " has no column '" + name + "'");
        return static_cast<std::size_t>(it - head.begin());
      };
      const std::size_t xi = col(spec.x);
      for (const auto& yname : spec.y) {
        const std::size_t yi = col(yname);
        Series s{spec.csv.size() > 1 ? path.stem().string() + ": " + yname : yname, {}};
        for (std::size_t r = 1; r < rows.size(); ++r) {
          if (rows[r].size() <= std::max(xi, yi)) continue;
          char* e1 = nullptr;
          char* e2 = nullptr;
          const double x = std::strtod(rows[r][xi].c_str(), &e1);
          const double y = std::strtod(rows[r][yi].c_str(), &e2);
          if (rows[r][xi].empty() || rows[r][yi].empty() || *e1 || *e2) continue;
          if (!std::isfinite(x) || !std::isfinite(y)) continue;
          if ((spec.log_x && x <= 0) || (spec.log_y && y <= 0)) continue;
          s.points.push_back({x, y});
        }
        series.push_back(std::move(s));
      }
    }
    atomic_write(spec.output, render_svg(series, spec));
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace pint
