#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stutterkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Thousands-separated integer, e.g. 3,285,766.
std::string group_digits(std::size_t n);

}  // namespace stutterkit::cli
