#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace procmine {

enum class ErrorCode {
  EmptyInput,
  MalformedClause,
  EmptyVocab,
  SingleClass,
  DimensionMismatch,
  TooFewExamples,
  ModelMismatch,
  InconsistentBlocks,
  SchemaError,
  DanglingPath,
  ModelNotFound,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::MalformedClause: return "MALFORMED_CLAUSE";
    case ErrorCode::EmptyVocab: return "EMPTY_VOCAB";
    case ErrorCode::SingleClass: return "SINGLE_CLASS";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::TooFewExamples: return "TOO_FEW_EXAMPLES";
    case ErrorCode::ModelMismatch: return "MODEL_MISMATCH";
    case ErrorCode::InconsistentBlocks: return "INCONSISTENT_BLOCKS";
    case ErrorCode::SchemaError: return "SCHEMA_ERROR";
    case ErrorCode::DanglingPath: return "DANGLING_PATH";
    case ErrorCode::ModelNotFound: return "MODEL_NOT_FOUND";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace procmine
