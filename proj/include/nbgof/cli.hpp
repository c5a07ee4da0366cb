#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nbgof::cli {

// Runs one subcommand. Exit status: 0 success, 1 parameter error, 2 I/O
// error, 3 convergence error.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nbgof::cli
