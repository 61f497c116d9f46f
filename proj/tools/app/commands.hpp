#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kreg::app {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

/// Entry point of the `kreg` executable; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kreg::app
