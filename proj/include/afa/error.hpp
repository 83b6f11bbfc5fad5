// Error codes shared by the C++ core and the C API boundary.
#pragma once

#include <stdexcept>
#include <string>

namespace afa {

enum class ErrorCode {
  None = 0,
  DimMismatch,
  DegenerateVector,
  DuplicateEnrollment,
  InsufficientSamples,
  OutOfOrderTurn,
  RolloverFailed,
  CorruptStore,
  ExtractionFailed,
  EmbedUnavailable,
  BackendUnavailable,
  ScriptMiss,
  UndefinedCoverage,
  UndefinedMetric,
  IoError,
  IngestAborted,
  InsufficientData,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace afa
