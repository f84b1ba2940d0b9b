#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssg {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitIo = 4,
};

/// Entry point of the `ssg` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace ssg
