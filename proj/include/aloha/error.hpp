#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aloha {

enum class ErrorCode {
  // rawlog
  MissingHeader,
  MalformedLine,
  NonMonotonicTimestamp,
  UnmatchedMouseUp,
  OutOfBoundsCoordinate,
  // shared
  InvariantViolation,
  SchemaError,
  Io,
  // consolidate
  UnsupportedKey,
  // frames
  MissingIndex,
  MissingFrameFile,
  NonIncreasingTimestamp,
  BeforeFirstFrame,
  NoGeometry,
  ImageFormat,
  // trace / planner
  NoJsonObject,
  MissingField,
  EmptyField,
  BackendUnavailable,
  UnparseablePlan,
  // executor
  UnknownType,
  BadValue,
  UnknownMonitor,
  OutOfBounds,
  // synthkit
  NoiseExceedsThreshold,
  // eval
  EmptyGuidance,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, an
// optional 1-based line (or element index, depending on the producer) and
// a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail, std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::size_t>& line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, std::string detail,
                       std::optional<std::size_t> line = std::nullopt);

}  // namespace aloha
