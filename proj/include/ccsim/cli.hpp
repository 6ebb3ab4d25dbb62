#pragma once

// Command-line front end. Everything the ccsim executable does lives here so
// tests can drive it in-process.

#include <ostream>

namespace ccsim::cli {

// Default model parameter file when --config is not given.
inline constexpr const char* kConfigEnv = "CCSIM_CONFIG";

enum ExitCode : int { kSuccess = 0, kVerificationFailure = 1, kUsageError = 2 };

// argv[0] is the program name. Reports go to `out` unless --output names a
// file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccsim::cli
