#pragma once

#include <stdexcept>
#include <string>

namespace alrec {

// Error categories map onto distinct CLI exit codes.

/// Invalid arguments, shapes, or configuration values.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system or parse failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Artifacts that do not belong together (feature mode, content hashes, sizes).
class MismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory or input that yields no windows to classify.
class NoSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alrec
