#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ginr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one subcommand. `args` excludes the program name. Results go to `out`; failures are
/// reported on `err` as one line `error: {"type": ..., "exit": ..., "message": ...}`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

/// Expands `--config FILE` (lines `key = value`, `#` comments) into `--key=value` arguments
/// for every key not already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// "a:b:s" (inclusive, step s) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

}  // namespace ginr::cli
