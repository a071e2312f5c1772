#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bigraph::cli {

/// Exit statuses of the command-line front end.
enum ExitCode : int { kOk = 0, kUsage = 1, kInvalid = 2, kVerifyFailed = 3 };

/// Parses argv (program name first) and runs the selected subcommand.
/// Results go to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

/// Reads a flat key=value file ('#' starts a comment) into "--key value"
/// tokens. Boolean values true/false become a bare flag or nothing.
std::vector<std::string> config_tokens(const std::string& path);

}  // namespace bigraph::cli
