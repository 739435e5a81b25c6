#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blr::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "BLR_OUTPUT_DIR";

// args[0] is the program name. Subcommands: counts, fit-ols, fit-bayes,
// evidence, update, plot.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blr::cli
