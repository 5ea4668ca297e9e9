#pragma once

#include <stdexcept>
#include <string>

namespace aesthete {

enum class ErrorKind {
  EmptyInput,
  DimensionMismatch,
  OutOfBounds,
  FixedParameter,
  InvalidArgument,
  DivergentGradient,
  AssessorLoad,
  UnsupportedImage,
  Encode,
  Io,
  Schema,
  Busy,
  NotFound,
  InvalidState,
};

/// Single exception type for the engine. `kind()` lets callers (CLI exit
/// codes, HTTP status mapping) dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aesthete
