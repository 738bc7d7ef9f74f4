#pragma once
// Subcommands behind the CLI. Each reads one config, writes its artifacts to
// the output directory and returns a process exit code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wf/config.hpp"

namespace wf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

inline constexpr const char* kOutputDirEnv = "WF_OUTPUT_DIR";

struct CommandOptions {
  std::string config_path;  // empty: built-in toy deal
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<Mode> mode;
  std::optional<unsigned> workers;
  std::string output_dir;
  std::string observed = "model";  // metrics: null | model
  std::string source = "pool";     // simulate: pool | engines
  bool robustness = false;         // calibrate: also run the +-0.1 probe
};

// Resolved config with CLI overrides applied.
AppConfig resolve_config(const CommandOptions& options);
std::string resolve_output_dir(const CommandOptions& options, const AppConfig& config);

int cmd_simulate(const CommandOptions& options, std::ostream& out);
int cmd_price(const CommandOptions& options, std::ostream& out);
int cmd_sensitivities(const CommandOptions& options, std::ostream& out);
int cmd_calibrate(const CommandOptions& options, std::ostream& out);
int cmd_timelapse(const CommandOptions& options, std::ostream& out);
int cmd_metrics(const CommandOptions& options, std::ostream& out);

// Runs `command`, mapping ConfigError to exit 1 and anything else to exit 2.
// Errors are written to `err` as one JSON line: {"error": "..."}.
int run_command(const std::string& command, const CommandOptions& options, std::ostream& out, std::ostream& err);

const std::vector<std::string>& command_names();

}  // namespace wf
