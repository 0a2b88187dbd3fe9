// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_CLI_HPP
#define D2DSIM_CLI_HPP

#include <iosfwd>

namespace d2dsim {

/// Exit codes of cli_main.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // I/O or internal error
  kExitUsage = 2,       // bad flags or values
  kExitValidation = 3,  // input traces or config rejected
};

/// Subcommands: synth, run, sweep, report, validate.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace d2dsim

#endif  // D2DSIM_CLI_HPP
