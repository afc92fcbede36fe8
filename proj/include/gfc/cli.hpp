#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gfc::cli {

/// Runs one CLI invocation. Returns the process exit code:
/// 0 success, 1 failed verification, 2 usage error, 3 domain error,
/// 4 numeric non-convergence.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gfc::cli
