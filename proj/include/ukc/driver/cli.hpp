#pragma once

#include <iosfwd>

namespace ukc::driver {

/// Exit codes of the command-line driver.
enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitUsage = 2, kExitCompile = 3 };

/// Entry point of the `ukc` tool: compile, run, ablate and bench
/// subcommands. Writes results to `out` and diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ukc::driver
