#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dep {

enum class ErrorCode {
    OutOfRangeToken,
    VocabSizeMismatch,
    KeepTokenOutOfRange,
    UnmappedToken,
    ShapeMismatch,
    InsufficientPoints,
    DegenerateFit,
    InvalidCounts,
    InvalidConfig,
    InvalidArgument,
    InconsistentInputs,
    RemapInconsistent,
    BadMagic,
    BadVersion,
    BadDtype,
    Truncated,
    ParseError,
    MissingInput,
    UnwritableOutput,
    OutputExists,
    Usage,
};

// Stable upper-snake-case name, e.g. "BAD_MAGIC". Part of the CLI contract.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dep
