#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trackcull::app {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

/// Runs one command line (arguments after the program name). Summaries go to
/// `out`, usage text and error messages to `err`, log records to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trackcull::app
