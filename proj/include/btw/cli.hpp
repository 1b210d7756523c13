#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace btw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitUsage = 64;   // unknown or missing subcommand
inline constexpr int kExitConfig = 65;  // unparsable flags or config file

inline constexpr const char* kVersion = "1.0.0";

/// Runs one workbench command. `args` excludes the program name. Reports go
/// to `out` (or to --out), diagnostics to `err`. Returns the exit status.
///
/// --config FILE reads a JSON object whose keys are flag names (underscores
/// or dashes); a "config" member, as found in every report, is used instead
/// of the top level when present, so a report reruns its own command.
/// Flags given on the command line win over the file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Names of all subcommands, in help order.
const std::vector<std::string>& subcommands();

}  // namespace btw::cli
