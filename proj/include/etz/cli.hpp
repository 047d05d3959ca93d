#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etz::cli {

/// Exit codes of `run`.
enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kInfeasible = 3,
    kIo = 4,
};

/// Runs one CLI invocation. argv[0] is the program name. Reports go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace etz::cli
