#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace migbench {

enum class ErrorCode {
    // kb_store
    MissingField,
    InvalidId,
    NoMatchers,
    BadRegex,
    BadGlob,
    ShortKeyword,
    MalformedKb,
    DuplicateId,
    // diff_model
    MalformedHunkHeader,
    CountMismatch,
    TruncatedPatch,
    MalformedPatch,
    MissingCommit,
    UnreadableSource,
    SubprocessFailed,
    // synth
    SynthFailure,
    NoRule,
    RemoteError,
    ValidationFailure,
    BadRemotePattern,
    // benchgen
    SchemaViolation,
    VersionMismatch,
    // evaluator
    DomainError,
    UnknownService,
    // cli
    BadConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        // clang-format off
        case ErrorCode::MissingField:        return "MissingField";
        case ErrorCode::InvalidId:           return "InvalidId";
        case ErrorCode::NoMatchers:          return "NoMatchers";
        case ErrorCode::BadRegex:            return "BadRegex";
        case ErrorCode::BadGlob:             return "BadGlob";
        case ErrorCode::ShortKeyword:        return "ShortKeyword";
        case ErrorCode::MalformedKb:         return "MalformedKb";
        case ErrorCode::DuplicateId:         return "DuplicateId";
        case ErrorCode::MalformedHunkHeader: return "MalformedHunkHeader";
        case ErrorCode::CountMismatch:       return "CountMismatch";
        case ErrorCode::TruncatedPatch:      return "TruncatedPatch";
        case ErrorCode::MalformedPatch:      return "MalformedPatch";
        case ErrorCode::MissingCommit:       return "MissingCommit";
        case ErrorCode::UnreadableSource:    return "UnreadableSource";
        case ErrorCode::SubprocessFailed:    return "SubprocessFailed";
        case ErrorCode::SynthFailure:        return "SynthFailure";
        case ErrorCode::NoRule:              return "NoRule";
        case ErrorCode::RemoteError:         return "RemoteError";
        case ErrorCode::ValidationFailure:   return "ValidationFailure";
        case ErrorCode::BadRemotePattern:    return "BadRemotePattern";
        case ErrorCode::SchemaViolation:     return "SchemaViolation";
        case ErrorCode::VersionMismatch:     return "VersionMismatch";
        case ErrorCode::DomainError:         return "DomainError";
        case ErrorCode::UnknownService:      return "UnknownService";
        case ErrorCode::BadConfig:           return "BadConfig";
        // clang-format on
    }
    return "Unknown";
}

/// Every failure surfaced by the library. `what()` reads `Code: detail`.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same error with `context: ` prepended to the detail (file path, service id, ...).
    Error annotated(std::string_view context) const {
        return Error(code_, std::string(context) + ": " + detail_);
    }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace migbench
