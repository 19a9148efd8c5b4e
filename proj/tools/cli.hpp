#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgealloc::cli {

/// Exit codes: 0 success, 1 error or no convergence, 2 infeasible instance.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgealloc::cli
