#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dlaudit::cli {

enum ExitCode : int { kOk = 0, kConfig = 1, kDataQuality = 2, kUsage = 64 };

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlaudit::cli
