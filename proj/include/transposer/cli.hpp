#pragma once

#include <string>
#include <vector>

namespace transposer {

// Command-line front end. Returns 0 on success, 1 when a solver reports
// non-convergence, 2 on input errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace transposer
