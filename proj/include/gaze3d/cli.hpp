#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gaze3d {

/// Runs the command line `args` (without the program name). Returns the exit
/// status: 0 on success, 1 on a runtime error, 2 on a usage error. Errors are
/// written to `err` as a single line "error: <Code>: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Quick invariant checks over every module. Prints one line per check and
/// returns true when all pass.
bool run_selftest(std::ostream& out);

}  // namespace gaze3d
