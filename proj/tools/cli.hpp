#pragma once

#include <string>
#include <vector>

namespace nfq::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kRuntimeAbort = 4 };

// Runs the command line `args` (without the program name) and returns the
// process exit code. Errors are reported on stderr.
int run(const std::vector<std::string>& args);

}  // namespace nfq::cli
