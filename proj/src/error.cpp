#include "sonify/error.hpp"

namespace sonify {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kAntipodalVectors: return "AntipodalVectors";
    case ErrorCode::kWrongModality: return "WrongModality";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kOrphanEmbedding: return "OrphanEmbedding";
    case ErrorCode::kUnknownScene: return "UnknownScene";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kNoAudioAssets: return "NoAudioAssets";
    case ErrorCode::kAdapterFailure: return "AdapterFailure";
    case ErrorCode::kAdapterProtocolError: return "AdapterProtocolError";
    case ErrorCode::kEmptyRatings: return "EmptyRatings";
    case ErrorCode::kUnknownFrame: return "UnknownFrame";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateSeries: return "DegenerateSeries";
    case ErrorCode::kMissingMetric: return "MissingMetric";
    case ErrorCode::kEmptyPairList: return "EmptyPairList";
    case ErrorCode::kUnknownAsset: return "UnknownAsset";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kOutOfOrder: return "OutOfOrder";
    case ErrorCode::kInvalidMos: return "InvalidMos";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kAdapterFailure:
    case ErrorCode::kAdapterProtocolError:
      return false;
    default:
      return true;
  }
}

}  // namespace sonify
