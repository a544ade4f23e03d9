#pragma once

#include <iosfwd>

namespace sparsegrp {

enum ExitCode { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

/// Entry point of the sparsegrp command line tool (subcommands fit, simulate, benchmark, arx).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparsegrp
