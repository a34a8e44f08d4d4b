#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pint/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pintlab: parallel-in-time experiments, benches and audits"};
  app.require_subcommand(1);

  pint::CliOptions opts;
  std::vector<std::string> formats;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "TOML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--format", formats, "output formats (json, csv, md)")
        ->delimiter(',')
        ->check(CLI::IsMember({"json", "csv", "md"}));
    sub->add_option("--override", opts.overrides, "dotted.key=value, applied before validation");
  };

  auto* run = app.add_subcommand("run", "run one configured experiment");
  common(run);

  auto* sweep = app.add_subcommand("sweep", "run a config once per value of one parameter");
  common(sweep);
  std::string param;
  std::vector<double> values;
  sweep->add_option("--param", param, "dotted config path to vary");
  sweep->add_option("--values", values, "values for --param")->delimiter(',');
  sweep->add_option("--threads", opts.threads, "also bench each Parareal row on this many threads");

  auto* audit = app.add_subcommand("audit", "audit runs for the twelve ways to inflate results");
  common(audit);

  auto* bench = app.add_subcommand("bench", "threaded Parareal with wall-clock timings");
  common(bench);
  bench->add_option("--threads", opts.threads, "worker threads (default 4)");

  auto* plot = app.add_subcommand("plot", "line plot of CSV columns as SVG");
  pint::PlotSpec ps;
  plot->add_option("csv", ps.csv, "CSV files")->required();
  plot->add_option("--x", ps.x, "x column")->required();
  plot->add_option("--y", ps.y, "y columns")->required()->delimiter(',');
  plot->add_flag("--log-x", ps.log_x, "logarithmic x axis");
  plot->add_flag("--log-y", ps.log_y, "logarithmic y axis");
  plot->add_option("--title", ps.title, "plot title");
  plot->add_option("--output,-o", ps.output, "SVG file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pint::kExitConfig;
  }
  opts.formats = formats;

  try {
    if (*run) return pint::cmd_run(opts);
    if (*bench) return pint::cmd_bench(opts);
    if (*audit) return pint::cmd_audit(opts);
    if (*sweep) {
      std::optional<pint::SweepSpec> spec;
      if (!param.empty() || !values.empty()) {
        if (param.empty() || values.empty()) {
          std::cerr << "config error: --param and --values go together\n";
          return pint::kExitConfig;
        }
        spec = pint::SweepSpec{param, values};
      }
      return pint::cmd_sweep(opts, spec);
    }
    if (*plot) return pint::cmd_plot(ps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pint::kExitNumerical;
  }
  return pint::kExitConfig;
}
