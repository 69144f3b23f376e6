#include "mdca/error.hpp"

namespace mdca {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kMalformedRecord: return "MalformedRecord";
        case ErrorCode::kDuplicateId: return "DuplicateId";
        case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
        case ErrorCode::kSampleTooLarge: return "SampleTooLarge";
        case ErrorCode::kAmbiguousSynonym: return "AmbiguousSynonym";
        case ErrorCode::kUnknownTier: return "UnknownTier";
        case ErrorCode::kLexiconMismatch: return "LexiconMismatch";
        case ErrorCode::kNoItemsFound: return "NoItemsFound";
        case ErrorCode::kEmptyList: return "EmptyList";
        case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::kEmptyTarget: return "EmptyTarget";
        case ErrorCode::kWeightSumInvalid: return "WeightSumInvalid";
        case ErrorCode::kMissingComponent: return "MissingComponent";
        case ErrorCode::kInsufficientExamples: return "InsufficientExamples";
        case ErrorCode::kUnknownConfig: return "UnknownConfig";
        case ErrorCode::kAuthMissing: return "AuthMissing";
        case ErrorCode::kRateLimited: return "RateLimited";
        case ErrorCode::kProviderError: return "ProviderError";
        case ErrorCode::kTimeout: return "Timeout";
        case ErrorCode::kStoreCorrupt: return "StoreCorrupt";
        case ErrorCode::kUnknownRun: return "UnknownRun";
        case ErrorCode::kRunExists: return "RunExists";
        case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::kEmptyRun: return "EmptyRun";
        case ErrorCode::kInsufficientReports: return "InsufficientReports";
        case ErrorCode::kDuplicateGrade: return "DuplicateGrade";
        case ErrorCode::kUnknownTask: return "UnknownTask";
        case ErrorCode::kUnknownRater: return "UnknownRater";
        case ErrorCode::kUnknownSession: return "UnknownSession";
        case ErrorCode::kSessionComplete: return "SessionComplete";
        case ErrorCode::kIncompleteTask: return "IncompleteTask";
        case ErrorCode::kIncompleteSession: return "IncompleteSession";
        case ErrorCode::kMissingScores: return "MissingScores";
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kIo: return "Io";
        case ErrorCode::kParse: return "Parse";
    }
    return "Unknown";
}

}  // namespace mdca
