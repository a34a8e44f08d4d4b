#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "pint/cli.hpp"

using namespace pint;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = PINT_CONFIG_DIR;

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() /
                     ("pintlab-test-" + std::to_string(::getpid()) + "-" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int pintlab(const std::string& args) {
  const std::string cmd = std::string(PINTLAB_EXE) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string cfg(const std::string& file) { return (kConfigs / file).string(); }

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, std::size_t& count) {
  const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::vector<std::pair<double, double>> pts;
  count = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator();
       ++it) {
    ++count;
    std::istringstream s((*it)[1].str());
    std::string pair;
    while (s >> pair) {
      const auto comma = pair.find(',');
      pts.push_back({std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1))});
    }
  }
  return pts;
}

}  // namespace

TEST_CASE("run writes a record with provenance", "[cli]") {
  const fs::path out = scratch("run");
  REQUIRE(pintlab("run --config " + cfg("nls-parareal-coarsen32.toml") + " --out-dir " +
                  out.string() + " --format json,csv,md") == kExitOk);
  const auto rec = read_json(out / "nls-parareal-coarsen32.json");
  CHECK(rec["kind"] == "run");
  CHECK(rec["config_hash"].get<std::string>().size() == 16);
  const auto& r = rec["results"];
  REQUIRE(r.contains("K"));
  const auto& sp = r["speedups"][0];
  CHECK(sp["provenance"] == "model");
  const double expect = parareal_theoretical_speedup(
      {32.0, r["alpha"].get<double>(), r["K"].get<double>()});
  CHECK(sp["value"].get<double>() == expect);
  CHECK(fs::exists(out / "nls-parareal-coarsen32.convergence.csv"));
  CHECK(fs::exists(out / "nls-parareal-coarsen32.solution.csv"));
  CHECK(fs::exists(out / "nls-parareal-coarsen32.md"));
  // every default is echoed back
  CHECK(rec["config"]["method"]["parareal"].contains("max_k"));
  CHECK(rec["config"]["problem"]["params"].contains("breather_a"));
}

TEST_CASE("reruns are identical apart from the timestamp", "[cli]") {
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  const std::string c = cfg("nls-parareal-coarsen32.toml");
  REQUIRE(pintlab("run --config " + c + " --out-dir " + a.string()) == kExitOk);
  REQUIRE(pintlab("run --config " + c + " --out-dir " + b.string()) == kExitOk);
  auto ja = read_json(a / "nls-parareal-coarsen32.json");
  auto jb = read_json(b / "nls-parareal-coarsen32.json");
  ja["environment"].erase("timestamp");
  jb["environment"].erase("timestamp");
  CHECK(ja == jb);
  CHECK(slurp(a / "nls-parareal-coarsen32.convergence.csv") ==
        slurp(b / "nls-parareal-coarsen32.convergence.csv"));
}

TEST_CASE("config errors exit 2 without output", "[cli]") {
  const fs::path d = scratch("bad");
  const fs::path out = d / "out";
  write_file(d / "broken.toml", "schema = 1\nname = \"x\"\n[problem\npreset = \"nls\"\n");
  CHECK(pintlab("run --config " + (d / "broken.toml").string() + " --out-dir " + out.string()) ==
        kExitConfig);
  write_file(d / "unknown.toml", "schema = 1\nname = \"x\"\nbogus = 3\n");
  CHECK(pintlab("run --config " + (d / "unknown.toml").string() + " --out-dir " + out.string()) ==
        kExitConfig);
  write_file(d / "badn.toml",
             "schema = 1\nname = \"x\"\n[problem]\npreset = \"nls\"\n[discretization]\nn = 48\n"
             "[method]\nkind = \"serial\"\n");
  CHECK(pintlab("run --config " + (d / "badn.toml").string() + " --out-dir " + out.string()) ==
        kExitConfig);
  write_file(d / "nomethod.toml", "schema = 1\nname = \"x\"\n[problem]\npreset = \"nls\"\n");
  CHECK(pintlab("run --config " + (d / "nomethod.toml").string() + " --out-dir " + out.string()) ==
        kExitConfig);
  CHECK(pintlab("run --config " + (d / "missing.toml").string()) == kExitConfig);
  CHECK(pintlab("frobnicate") == kExitConfig);
  CHECK((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("numerical failure exits 3 with a diagnostic", "[cli]") {
  const fs::path out = scratch("fail");
  CHECK(pintlab("run --config " + cfg("nls-parareal-coarsen32.toml") + " --out-dir " +
                out.string() + " --override method.parareal.max_k=1" +
                " --override method.parareal.tol=1e-14") == kExitNumerical);
  const auto d = read_json(out / "nls-parareal-coarsen32.diagnostic.json");
  CHECK(d["kind"] == "diagnostic");
  CHECK_FALSE(fs::exists(out / "nls-parareal-coarsen32.json"));
}

TEST_CASE("config echo round trip", "[cli]") {
  const auto c = load_experiment(kConfigs / "nls-pfasst-wellresolved.toml");
  const auto again = parse_experiment(parse_toml_text(echo_toml(c), "echo"));
  CHECK(again.hash() == c.hash());
  CHECK(again.to_json() == c.to_json());

  const auto o = load_experiment(kConfigs / "nls-pfasst-wellresolved.toml",
                                 {"method.pfasst.tol=1e-7", "discretization.n=64"});
  CHECK(o.pfasst.tol == 1e-7);
  CHECK(o.n == 64);
  CHECK_THROWS_AS(load_experiment(kConfigs / "nls-pfasst-wellresolved.toml",
                                  {"method.pfasst.tol=\"small\""}),
                  ConfigError);
}

TEST_CASE("a one-value sweep reproduces the run", "[cli]") {
  const fs::path out = scratch("sweep1");
  const std::string c = cfg("nls-parareal-coarsen32.toml");
  REQUIRE(pintlab("run --config " + c + " --out-dir " + out.string()) == kExitOk);
  REQUIRE(pintlab("sweep --config " + c + " --out-dir " + out.string() +
                  " --param method.parareal.n_slices --values 32") == kExitOk);
  const auto run = read_json(out / "nls-parareal-coarsen32.json");
  const auto sweep = read_json(out / "nls-parareal-coarsen32.sweep.json");
  REQUIRE(sweep["rows"].size() == 1);
  const auto& row = sweep["rows"][0];
  CHECK(row["config_hash"] == run["config_hash"]);
  CHECK(row["iterations"] == run["results"]["K"]);
  CHECK(row["achieved_error"] == run["results"]["error"]);
  CHECK(row["S_theory"] == run["results"]["speedups"][0]);
}

TEST_CASE("slice sweep on the over-resolved NLS config and its plot", "[cli]") {
  const fs::path out = scratch("sweepnp");
  REQUIRE(pintlab("sweep --config " + cfg("nls-parareal-overresolved.toml") + " --out-dir " +
                  out.string()) == kExitOk);
  const fs::path csv = out / "nls-parareal-overresolved.sweep.csv";
  const auto rows = read_csv(csv);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == sweep_columns());
  std::vector<double> s;
  for (std::size_t r = 1; r < rows.size(); ++r) s.push_back(std::stod(rows[r][3]));
  // K = N_P on the smallest counts gives equal model values there
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] >= s[i - 1]);
  CHECK(s.back() >= 5.0);
  CHECK(s.back() > s.front());

  const fs::path svg = out / "np.svg";
  REQUIRE(pintlab("plot " + csv.string() + " --x value --y S_theory -o " + svg.string()) ==
          kExitOk);
  std::size_t lines = 0;
  const auto pts = polyline_points(slurp(svg), lines);
  CHECK(lines == 1);
  REQUIRE(pts.size() == s.size());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].first > pts[i - 1].first);
    CHECK(pts[i].second <= pts[i - 1].second);  // SVG y grows downwards
  }
  // linear axes: pixel offsets are proportional to the data
  const double frac = (s[2] - s[0]) / (s.back() - s[0]);
  const double pfrac = (pts[0].second - pts[2].second) / (pts[0].second - pts.back().second);
  CHECK(std::abs(frac - pfrac) < 0.01);
}

TEST_CASE("plot basics", "[cli]") {
  const fs::path d = scratch("plot");
  write_file(d / "two.csv", "a,b\n1,2\n3,5\n");
  const std::string base = "plot " + (d / "two.csv").string() + " --x a --y b";
  REQUIRE(pintlab(base + " -o " + (d / "one.svg").string()) == kExitOk);
  REQUIRE(pintlab(base + " -o " + (d / "two.svg").string()) == kExitOk);
  const std::string svg = slurp(d / "one.svg");
  std::size_t lines = 0;
  CHECK(polyline_points(svg, lines).size() == 2);
  CHECK(lines == 1);
  CHECK(svg == slurp(d / "two.svg"));
  CHECK(pintlab(base.substr(0, base.size() - 1) + "missing -o " + (d / "x.svg").string()) ==
        kExitConfig);
  CHECK_FALSE(fs::exists(d / "x.svg"));
}

TEST_CASE("audit exit codes", "[cli]") {
  const fs::path out = scratch("audit");
  CHECK(pintlab("audit --config " + cfg("empty-claims.toml") + " --out-dir " + out.string()) ==
        kExitOk);
  const auto empty = read_json(out / "empty-claims.audit.json");
  REQUIRE(empty["entries"].size() == 12);
  for (const auto& e : empty["entries"]) CHECK(e["verdict"] == "NOT_APPLICABLE");

  CHECK(pintlab("audit --config " + cfg("honest.toml") + " --out-dir " + out.string()) ==
        kExitOk);
  const auto honest = read_json(out / "honest.audit.json");
  CHECK(honest["flags"].empty());
  CHECK(fs::exists(out / "honest.audit.md"));
}

TEST_CASE("bench on one thread", "[cli]") {
  const fs::path out = scratch("bench");
  REQUIRE(pintlab("bench --config " + cfg("nls-parareal-coarsen32.toml") + " --threads 1" +
                  " --out-dir " + out.string()) == kExitOk);
  const auto rec = read_json(out / "nls-parareal-coarsen32.bench.json");
  CHECK(rec["results"]["bitwise_equal_to_emulation"] == true);
  CHECK(rec["speedup"]["measured"]["provenance"] == "measured");
  CHECK(rec["speedup"]["measured"]["value"].get<double>() <= 1.05);
  const auto timings = read_csv(out / "nls-parareal-coarsen32.timings.csv");
  CHECK(timings.front() == std::vector<std::string>{"phase", "slice", "iteration", "seconds"});
  CHECK(timings.size() > 1);

  const fs::path run = scratch("bench-run");
  REQUIRE(pintlab("run --config " + cfg("nls-parareal-coarsen32.toml") + " --out-dir " +
                  run.string()) == kExitOk);
  const auto r = read_json(run / "nls-parareal-coarsen32.json");
  CHECK(rec["results"]["K"] == r["results"]["K"]);
  CHECK(rec["results"]["error"] == r["results"]["error"]);
  CHECK(rec["config_hash"] == r["config_hash"]);
}
