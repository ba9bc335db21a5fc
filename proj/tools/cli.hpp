#pragma once

#include <iosfwd>

namespace upgd {

/// Command-line entry point. Returns 0 on success, 1 on invalid input or
/// usage, 2 on numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace upgd
