#include "aloha/error.hpp"

namespace aloha {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::UnmatchedMouseUp: return "UnmatchedMouseUp";
    case ErrorCode::OutOfBoundsCoordinate: return "OutOfBoundsCoordinate";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnsupportedKey: return "UnsupportedKey";
    case ErrorCode::MissingIndex: return "MissingIndex";
    case ErrorCode::MissingFrameFile: return "MissingFrameFile";
    case ErrorCode::NonIncreasingTimestamp: return "NonIncreasingTimestamp";
    case ErrorCode::BeforeFirstFrame: return "BeforeFirstFrame";
    case ErrorCode::NoGeometry: return "NoGeometry";
    case ErrorCode::ImageFormat: return "ImageFormat";
    case ErrorCode::NoJsonObject: return "NoJsonObject";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnparseablePlan: return "UnparseablePlan";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::UnknownMonitor: return "UnknownMonitor";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NoiseExceedsThreshold: return "NoiseExceedsThreshold";
    case ErrorCode::EmptyGuidance: return "EmptyGuidance";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& detail,
                    const std::optional<std::size_t>& line) {
  std::string msg(to_string(code));
  if (line) msg += "(" + std::to_string(*line) + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string detail, std::optional<std::size_t> line)
    : std::runtime_error(compose(code, detail, line)),
      code_(code),
      line_(line),
      detail_(std::move(detail)) {}

void fail(ErrorCode code, std::string detail, std::optional<std::size_t> line) {
  throw Error(code, std::move(detail), line);
}

}  // namespace aloha
