#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ppgbp::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the process
/// exit code: 0 success, 1 configuration, 2 data format, 3 divergence, 4 I/O.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ppgbp::cli
