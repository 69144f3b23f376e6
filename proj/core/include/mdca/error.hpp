/// @file error.hpp
/// @brief Error type shared by every mdca module.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdca {

enum class ErrorCode {
    // corpus
    kMalformedRecord,
    kDuplicateId,
    kEmptyCorpus,
    kSampleTooLarge,
    // taxonomy
    kAmbiguousSynonym,
    kUnknownTier,
    kLexiconMismatch,
    // segmenter
    kNoItemsFound,
    kEmptyList,
    // metrics
    kProviderUnavailable,
    kEmptyTarget,
    kWeightSumInvalid,
    // promptkit
    kMissingComponent,
    kInsufficientExamples,
    kUnknownConfig,
    // gateway
    kAuthMissing,
    kRateLimited,
    kProviderError,
    kTimeout,
    // runner
    kStoreCorrupt,
    kUnknownRun,
    kRunExists,
    kChecksumMismatch,
    // analytics
    kEmptyRun,
    // consistency
    kInsufficientReports,
    kDuplicateGrade,
    kUnknownTask,
    kUnknownRater,
    kUnknownSession,
    kSessionComplete,
    kIncompleteTask,
    kIncompleteSession,
    kMissingScores,
    // general
    kInvalidArgument,
    kIo,
    kParse,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mdca
