#include <CLI11.hpp>

#include <string>

#include "miocp/cli.hpp"
#include "miocp/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"miocp: parametric mixed-integer optimal control experiments"};

  std::string config_path;
  miocp::CliOverrides overrides;
  std::string command, out_dir;
  unsigned jobs = 0;

  app.add_option("--config", config_path, "configuration file (JSON)")->required();
  app.add_option("--command", command,
                 "override the experiment command (solve, sweep, lipschitz, duality, cq, kink)");
  app.add_option("--jobs", jobs, "worker count (default: available parallelism)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_flag("--quiet", overrides.quiet, "suppress per-sample summary lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (!command.empty()) overrides.command = command;
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  overrides.jobs = jobs > 0 ? jobs : miocp::default_jobs();

  return miocp::run(config_path, overrides);
}
