#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace koopreg::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;  ///< numerical or data failure
inline constexpr int kExitUsage = 2;    ///< bad flags, bad config, missing config file

/// Runs one command. args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace koopreg::cli
