#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace toolpose {

// Runs the command line (args excludes the program name). Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toolpose
