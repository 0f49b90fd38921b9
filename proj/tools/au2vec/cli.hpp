#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace au2vec::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericError = 3,
};

/// Runs one au2vec invocation. `args` excludes the program name. Progress and
/// diagnostics go to `err`; query results (neighbors) go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace au2vec::cli
