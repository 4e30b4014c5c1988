#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deepsep {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  // distort / data
  DuplicateId,
  ParseError,
  SchemaViolation,
  DanglingReference,
  // features
  UnknownLayer,
  ImageTooSmall,
  BackendFailure,
  TapMismatch,
  BadMagic,
  VersionMismatch,
  CorruptIndex,
  // separability
  DegenerateWithin,
  CoincidentCentroids,
  ConstantIndex,
  RankDeficient,
  KeyMismatch,
  // quality / recognition
  ConstantInput,
  MissingVector,
  DegenerateSplit,
  EmptyTrainSet,
  // cli
  ConfigError,
  MissingInput,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace deepsep
