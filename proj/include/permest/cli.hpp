#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permest::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kRefuted = 2, // refutation, structural or convergence failure
    kNumericError = 3,
};

// Runs one subcommand. `args` excludes the program name. Reports go to `out`
// as JSON; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "PERMEST_OUT_DIR";

} // namespace permest::cli
