#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcd {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one CLI invocation. `args` excludes the program name. Errors go to
/// `err` as a single JSON line {"error": <category>, "message": <text>}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcd
