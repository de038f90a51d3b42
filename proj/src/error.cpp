#include "styloforge/error.hpp"

namespace styloforge {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::DuplicateAuthor: return "DuplicateAuthor";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::UnknownLanguage: return "UnknownLanguage";
    case ErrorCode::UnannotatedSequence: return "UnannotatedSequence";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace styloforge
