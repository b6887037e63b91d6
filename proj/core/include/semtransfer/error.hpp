#pragma once

#include <stdexcept>
#include <string>

namespace semtransfer {

/// Input could not be read or parsed (malformed TSV/JSON, missing file).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a domain invariant or operation precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semtransfer
