#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace morozov::cli {

/// Stable exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kIoError = 1,
  kRegimeFailure = 2,
  kNonConvergence = 3,
  kVerificationFailure = 4,
};

/// Runs the command line `args` (args[0] is the program name). Normal
/// output goes to `out`, diagnostics and logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace morozov::cli
