#pragma once

#include <stdexcept>
#include <string>

namespace blr {

// Base for every error the library raises on bad input. The CLI maps these to
// exit code 2; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data is malformed, missing, or violates a precondition of the
// requested operation (too few points, zero variance, unreadable file).
class DataError : public Error {
 public:
  using Error::Error;
};

// A mathematical precondition failed (non-positive scale, boundary value).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace blr
