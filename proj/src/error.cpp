#include "dep/error.hpp"

namespace dep {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::OutOfRangeToken: return "OUT_OF_RANGE_TOKEN";
        case ErrorCode::VocabSizeMismatch: return "VOCAB_SIZE_MISMATCH";
        case ErrorCode::KeepTokenOutOfRange: return "KEEP_TOKEN_OUT_OF_RANGE";
        case ErrorCode::UnmappedToken: return "UNMAPPED_TOKEN";
        case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
        case ErrorCode::InsufficientPoints: return "INSUFFICIENT_POINTS";
        case ErrorCode::DegenerateFit: return "DEGENERATE_FIT";
        case ErrorCode::InvalidCounts: return "INVALID_COUNTS";
        case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::InconsistentInputs: return "INCONSISTENT_INPUTS";
        case ErrorCode::RemapInconsistent: return "REMAP_INCONSISTENT";
        case ErrorCode::BadMagic: return "BAD_MAGIC";
        case ErrorCode::BadVersion: return "BAD_VERSION";
        case ErrorCode::BadDtype: return "BAD_DTYPE";
        case ErrorCode::Truncated: return "TRUNCATED";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::MissingInput: return "MISSING_INPUT";
        case ErrorCode::UnwritableOutput: return "UNWRITABLE_OUTPUT";
        case ErrorCode::OutputExists: return "OUTPUT_EXISTS";
        case ErrorCode::Usage: return "USAGE";
    }
    return "UNKNOWN";
}

}  // namespace dep
