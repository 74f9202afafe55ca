#pragma once

#include <string>
#include <vector>

namespace skloc::cli {

// Parses command-line arguments (program name excluded), echoes the merged
// configuration, and runs the selected subcommand. Exit-code contract:
// 0 success, 2 invalid configuration (the message names the offending flag
// or field), 1 runtime failure. `verify` additionally returns 1 when any
// oracle check fails.
int parse_and_dispatch(const std::vector<std::string>& args);

}  // namespace skloc::cli
