#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace saekit::cli {

// Runs one command line (without the program name). Returns the process exit
// status: 0 on success, 1 on a runtime error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace saekit::cli
