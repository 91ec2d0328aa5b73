#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rruc {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitInfeasible = 1,
    kExitInputError = 2,
};

/// Runs the `rruc` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rruc
