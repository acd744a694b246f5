#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edfa::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kNumericFailure = 3,
};

// args excludes the program name. Never throws; every failure maps to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Gradient checks pass when the max relative error stays below this.
inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace edfa::cli
