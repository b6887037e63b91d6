#pragma once

#include <iosfwd>

namespace semtransfer::cli {

enum ExitCode : int {
  kOk = 0,
  kParseFailure = 2,
  kValidationFailure = 3,
  kNotConverged = 4,
};

/// Runs one command line. Results go to files or `out`; diagnostics are JSON
/// lines on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semtransfer::cli
