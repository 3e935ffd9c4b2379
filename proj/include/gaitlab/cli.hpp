#pragma once

#include <ostream>

namespace gaitlab {

// Entry point behind the `gaitlab` binary. Exit codes: 0 success, 1 runtime
// failure, 2 invalid configuration or command line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gaitlab
