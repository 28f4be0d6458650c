#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsereg {

enum class ErrorCode {
  EmptyCloud,
  BadFactor,
  InvalidArgument,
  TooFewPoints,
  DegenerateGeometry,
  ZeroQuaternion,
  ShapeMismatch,
  EmptyDataset,
  IndexMismatch,
  MissingCheckpoint,
  CorruptDataset,
  ConfigMismatch,
  Io,
  NumericFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace sparsereg
