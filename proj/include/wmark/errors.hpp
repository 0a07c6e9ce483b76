#pragma once

#include <stdexcept>
#include <string>

namespace wmark {

/// Bad input data: unreadable files, malformed formats, empty corpora,
/// infeasible experiment requests. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated call contract (domain errors on operation arguments).
/// CLI exit code 3 when it escapes, since it signals a bug in the caller.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace wmark
