#pragma once

#include <iosfwd>

namespace sndropt {

enum ExitCode : int { exit_ok = 0, exit_solver = 2, exit_input = 3, exit_oracle = 4 };

/// Entry point of the sndropt command-line tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sndropt
