#include "sparsereg/error.hpp"

namespace sparsereg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::BadFactor: return "BadFactor";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::ZeroQuaternion: return "ZeroQuaternion";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IndexMismatch: return "IndexMismatch";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::CorruptDataset: return "CorruptDataset";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace sparsereg
