#pragma once

// The six experiments behind the command line. run_command computes without
// touching the file system; dispatch also writes the artifacts and manifest.

#include <filesystem>
#include <string>
#include <vector>

#include "visco/config.hpp"
#include "visco/io.hpp"

namespace visco {

enum ExitCode : int { Pass = 0, ScientificFailure = 1, OperationalError = 2 };

struct CommandOutput {
  bool pass = true;
  std::string summary;  ///< short "key: value" text for the terminal
  std::vector<Artifact> artifacts;
};

/// Throws std::invalid_argument for an unknown command or one that does not
/// match c.experiment, and lets compute-module errors through.
CommandOutput run_command(const std::string& cmd, const RunConfig& c);

struct DispatchResult {
  int exit_code = OperationalError;
  std::string message;  ///< summary on success, the error otherwise
  Manifest manifest;
};

/// Never throws: every failure maps to an exit code.
DispatchResult dispatch(const std::string& cmd, const RunConfig& c, const std::filesystem::path& out);

}  // namespace visco
