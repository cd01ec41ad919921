#pragma once

#include <stdexcept>
#include <string>

namespace slmsql {

enum class ErrorCode {
    InvalidConfig,
    MissingDatabaseManifest,
    UnknownDatabase,
    UnknownTask,
    LengthMismatch,
    RaggedRows,
    NoSqlFound,
    KExceedsN,
    EndpointUnavailable,
    AuthRejected,
    GoldExecutionFailed,
    ParseError,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for everything the library throws. Carries a stable code
/// so the CLI and the reward service can map failures without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace slmsql
