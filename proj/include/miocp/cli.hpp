#ifndef MIOCP_CLI_HPP
#define MIOCP_CLI_HPP

#include <optional>
#include <string>

namespace miocp {

struct CliOverrides {
  std::optional<std::string> command;
  std::optional<std::string> out_dir;
  std::optional<unsigned> jobs;
  bool quiet = false;
};

/// Runs the experiment described by the config file and writes
/// samples.csv / report.json / meta.json into the output directory.
/// Returns the process exit code: 0 success, 2 validation failure,
/// 3 numerical failure.
int run(const std::string& config_path, const CliOverrides& overrides = {});

/// Same, with the configuration supplied as text (used by tests).
int run_from_text(const std::string& config_text, const CliOverrides& overrides = {});

}  // namespace miocp

#endif
