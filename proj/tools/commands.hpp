#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace carpetq::cli {

struct Failure {
  std::string invariant;
  int k = 0;  // 0 when the failure is not tied to a level
  std::string detail;
};

struct CommandResult {
  std::string command;
  std::vector<Failure> failures;
  std::vector<std::string> written;  // output files, relative to the output directory

  bool ok() const { return failures.empty(); }
};

// Commands write their tables under cfg.output_dir and a short summary to log.
CommandResult cmd_validate(const RunConfig& cfg, std::ostream& log);
CommandResult cmd_partition(const RunConfig& cfg, std::ostream& log);
CommandResult cmd_antichain(const RunConfig& cfg, std::ostream& log);
CommandResult cmd_sequences(const RunConfig& cfg, std::ostream& log);
CommandResult cmd_quantize(const RunConfig& cfg, std::ostream& log);
// Throws std::runtime_error("nothing to report ...") when no prior tables exist.
CommandResult cmd_report(const RunConfig& cfg, std::ostream& log);

// Dispatches by name; throws std::invalid_argument for an unknown command.
CommandResult run_command(const std::string& name, const RunConfig& cfg, std::ostream& log);

// {"command": ..., "ok": ..., "failures": [{"invariant", "k", "detail"}]}
std::string failures_json(const CommandResult& result);

}  // namespace carpetq::cli
