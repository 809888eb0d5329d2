#pragma once

#include <string>
#include <vector>

namespace procams {

/// Exit codes: 0 success, 1 internal failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace procams
