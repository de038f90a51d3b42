#pragma once

#include <stdexcept>
#include <string>

namespace styloforge {

enum class ErrorCode {
  MalformedLine,
  MissingField,
  EmptyDocument,
  DuplicateAuthor,
  BadRatios,
  EmptyCorpus,
  EmptyText,
  UnknownLanguage,
  UnannotatedSequence,
  BatchTooSmall,
  BadDims,
  TokenOutOfRange,
  DegenerateEmbedding,
  DegenerateBatch,
  StepOutOfRange,
  ShapeMismatch,
  NonFiniteGradient,
  NonFiniteLoss,
  EmptyValidation,
  TooFewPairs,
  SingleClass,
  DimMismatch,
  ConfigError,
  IoError,
  FormatError,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace styloforge
