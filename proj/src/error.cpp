#include "deepsep/error.hpp"

namespace deepsep {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownLayer: return "UnknownLayer";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::TapMismatch: return "TapMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::DegenerateWithin: return "DegenerateWithin";
    case ErrorCode::CoincidentCentroids: return "CoincidentCentroids";
    case ErrorCode::ConstantIndex: return "ConstantIndex";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::MissingVector: return "MissingVector";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

}  // namespace deepsep
