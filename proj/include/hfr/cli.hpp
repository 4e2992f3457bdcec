#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hfr {

/// Runs the hfr command line. args excludes the program name. Returns the
/// process exit code; on failure every output file the command created is
/// removed again.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hfr
