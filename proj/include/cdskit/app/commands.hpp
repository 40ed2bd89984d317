#pragma once

#include <iosfwd>

namespace cdskit::app {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNotConverged = 3;

/// Parses argv, runs one subcommand and returns the process exit code.
/// Reports go to `out` unless --out names a file; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cdskit::app
