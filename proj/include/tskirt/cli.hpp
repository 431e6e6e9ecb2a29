#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tskirt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kFormatVersion = 1;

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 success, 1 internal error, 2 user or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tskirt::cli
