#pragma once

#include <stdexcept>
#include <string>

namespace sddc {

// Base for every error the library raises. Subclasses exist where callers
// (mostly the CLI and tests) need to tell failure classes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BitstreamError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace sddc
