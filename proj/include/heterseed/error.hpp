#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heterseed {

enum class ErrorCode {
  MissingFile,
  SchemaMismatch,
  IndexOutOfRange,
  OverlappingSplits,
  IoFailure,
  NonComposableMetapath,
  NonSymmetricMetapath,
  UnknownMetapath,
  EmptyEdgeSet,
  EmptyList,
  ShapeMismatch,
  DisconnectedLoss,
  MissingProjection,
  EmptyMask,
  EmptySplit,
  InvalidConfig,
  SameClassPairRequired,
  MissingFeatures,
  BadCheckpoint,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::OverlappingSplits: return "OverlappingSplits";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NonComposableMetapath: return "NonComposableMetapath";
    case ErrorCode::NonSymmetricMetapath: return "NonSymmetricMetapath";
    case ErrorCode::UnknownMetapath: return "UnknownMetapath";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DisconnectedLoss: return "DisconnectedLoss";
    case ErrorCode::MissingProjection: return "MissingProjection";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SameClassPairRequired: return "SameClassPairRequired";
    case ErrorCode::MissingFeatures: return "MissingFeatures";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace heterseed
