#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aot::cli {

/// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "AOT_OUTPUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerifyFail = 2;

/// args[0] is the subcommand (generate, denoise, verify, lemma-check, train,
/// plot). Returns the process exit code.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aot::cli
