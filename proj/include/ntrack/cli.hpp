#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ntrack {

/// Exit codes of the command line front end.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_data = 3 };

/// Runs one command line; log lines go to `log`.
int run_cli(const std::vector<std::string>& args, std::ostream& log);
int run_cli(int argc, char** argv);

}  // namespace ntrack
