#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace addrparse {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Relative --config paths that do not exist are looked up in this directory.
inline constexpr const char* kConfigDirEnv = "ADDRPARSE_CONFIG_DIR";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDiverged = 3;

// Runs one subcommand; args exclude the program name. Every successful run
// writes a manifest (see --manifest) from which `replay` re-runs it.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace addrparse
