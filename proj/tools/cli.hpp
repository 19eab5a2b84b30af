#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line. args excludes the program name. Primary output
/// goes to `out` (or --out), diagnostics and progress to `err`.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace cpt::cli
