#pragma once

#include <ostream>

namespace mvdepth::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitThreshold = 1;
inline constexpr int kExitUsage = 2;

// Parses argv (program name first) and runs one subcommand. Reports go to
// `out`, diagnostics and warnings to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvdepth::cli
