#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace impact {

// CLI-facing overrides for settings that also live in the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> engine;  // "quadrature" | "mc"
  std::optional<std::int64_t> paths;
  std::optional<int> nodes;
  std::optional<double> tol;
};

// Parses the scenario config, runs one command and writes its CSV tables and
// run manifest under out_dir. Throws ConfigError / SolverError /
// OverflowError; the CLI maps those to exit codes.
void run_scenario(const std::string& command, const std::string& config_path,
                  const std::string& out_dir, const CliOverrides& overrides);

}  // namespace impact
