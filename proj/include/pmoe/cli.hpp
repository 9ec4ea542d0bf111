#pragma once

#include <iosfwd>

namespace pmoe {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverAbort = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasibleInit = 3;

// Entry point for `pmoe <command> ...`; writes results to `out` and
// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmoe
