#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hyvid::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2, kIoError = 3 };

/// Runs one `hyvid` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyvid::cli
