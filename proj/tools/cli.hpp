#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tension::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDomain = 2 };

/// Runs one tool invocation. `args` excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tension::cli
