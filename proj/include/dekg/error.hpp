#pragma once

#include <stdexcept>
#include <string>

namespace dekg {

enum class ErrorKind {
  InvalidArgument,
  Io,
  Parse,
  Dimension,
  Index,
  Numeric,
  Constraint,
  DegenerateSplit,
  Checkpoint,
  Verification,
  Config,
  Construction,
};

/// Single exception type for the library; `kind()` says which contract broke.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace dekg
