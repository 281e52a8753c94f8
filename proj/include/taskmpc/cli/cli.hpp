#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace taskmpc::cli {

// Version string recorded in every run manifest.
inline constexpr const char* kVersion = "1.0.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;           // config or usage problem
inline constexpr int kExitNonConvergence = 3;  // results are still written
inline constexpr int kExitBackend = 4;         // fixture miss or remote failure

// Full command-line entry point, callable in-process so tests can drive the
// binary without spawning it. `argv[0]` is the program name; output and
// diagnostics go to the given streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience overload taking just the arguments (no program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taskmpc::cli
