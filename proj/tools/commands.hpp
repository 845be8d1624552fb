#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evdag::cli {

enum ExitCode : int {
    kOk = 0,
    kVerifyFailed = 1,
    kUsage = 2,
    kLearnerError = 3,
};

// Runs one command line (args[0] is the program name). Normal output goes to
// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads a "key = value" config file into "--key=value" tokens. Blank lines
// and lines starting with '#' are skipped. Throws evdag::ParseError.
std::vector<std::string> read_config_tokens(const std::string& path);

}  // namespace evdag::cli
