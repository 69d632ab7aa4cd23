#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlgd::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kNegative = 1,      // not second order / disconnected graph
  kInputError = 2,    // unparsable arguments, config, state or graph file
  kRuntimeError = 3,  // divergence, infeasible start
};

// Output directory used when --out is omitted.
inline constexpr const char* kOutputDirEnv = "NLGD_OUTPUT_DIR";

// Entry point behind the nlgd executable. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlgd::cli
