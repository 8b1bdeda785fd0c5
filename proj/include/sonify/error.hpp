#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sonify {

enum class ErrorCode {
  kInvalidArgument,
  kZeroVector,
  kDimMismatch,
  kNotUnitNorm,
  kAntipodalVectors,
  kWrongModality,
  kNonFinite,
  kIo,
  kFileNotFound,
  kParseError,
  kDuplicateId,
  kOrphanEmbedding,
  kUnknownScene,
  kUnknownId,
  kInvalidConfig,
  kEmptyCandidates,
  kNoAudioAssets,
  kAdapterFailure,
  kAdapterProtocolError,
  kEmptyRatings,
  kUnknownFrame,
  kEmptyInput,
  kLengthMismatch,
  kDegenerateSeries,
  kMissingMetric,
  kEmptyPairList,
  kUnknownAsset,
  kUnknownSession,
  kOutOfOrder,
  kInvalidMos,
};

std::string_view error_code_name(ErrorCode code);

// True for errors caused by bad inputs (files, flags, ids) rather than by a
// failure while doing the work.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sonify
