#ifndef SKEWFAIR_ERRORS_H_
#define SKEWFAIR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace skewfair {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that parses but violates a schema or invariant (exit code 1 in the CLI).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written (exit code 2 in the CLI).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace skewfair

#endif  // SKEWFAIR_ERRORS_H_
