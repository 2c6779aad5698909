#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace donverify::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kUsageOrFormat = 1,
    kCheatingDetected = 2,
    kDonorAbsent = 3,
};

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace donverify::cli
