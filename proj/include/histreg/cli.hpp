#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace histreg::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kMatcherFailure = 3,
};

// Runs one command line (args[0] is the program name). Reports go to `out`,
// diagnostics and usage text to `err`.
int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace histreg::cli
