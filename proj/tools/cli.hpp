#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rawdeg::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,     // unexpected internal error
  kUsage = 2,       // bad arguments
  kValidation = 3,  // invalid data, parameters or formats
  kIo = 4,          // filesystem errors
  kPartial = 5,     // some items skipped or unmatched
};

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rawdeg::cli
