#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gfm::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 2,
    numerical_failure = 3,
};

// Runs one gfmlab invocation. args excludes the program name.
// Human-readable progress goes to out, error records to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gfm::cli
