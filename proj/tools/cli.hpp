#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcop::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kResourceCap = 3 };

/// Entry point of the `dcop` tool. `args` excludes the program name.
/// Output files go to --out-dir, else $DCOP_OUTPUT_DIR, else the working directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcop::cli
