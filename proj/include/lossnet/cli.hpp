#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lossnet {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAssumption = 3;

/// Runs the command line; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest-safe decimal text: 17 significant digits, '.' separator.
std::string format_real(double x);

/// min, min+step, ... up to max (inclusive, with 1e-9 step slack).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace lossnet
