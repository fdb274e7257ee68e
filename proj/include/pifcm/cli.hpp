#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pifcm::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kFailure = 2 };

/// Runs one command line (args excludes the program name). Usage problems
/// return kUsage, runtime failures kFailure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pifcm::cli
