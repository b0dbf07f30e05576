#pragma once

#include <stdexcept>
#include <string>

namespace mpm {

/// Bad arguments, shapes or configuration. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values encountered during numerical work. Maps to CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataErrorCode {
  kIo,
  kCorruptHeader,
  kCorruptContainer,
  kShapeMismatch,
  kVersionMismatch,
};

const char* to_string(DataErrorCode code);

/// Problems reading or writing the on-disk containers. Maps to CLI exit code 3.
class DataFormatError : public std::runtime_error {
 public:
  DataFormatError(DataErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  DataErrorCode code() const noexcept { return code_; }

 private:
  DataErrorCode code_;
};

inline const char* to_string(DataErrorCode code) {
  switch (code) {
    case DataErrorCode::kIo: return "io error";
    case DataErrorCode::kCorruptHeader: return "corrupt header";
    case DataErrorCode::kCorruptContainer: return "corrupt container";
    case DataErrorCode::kShapeMismatch: return "shape mismatch";
    case DataErrorCode::kVersionMismatch: return "version mismatch";
  }
  return "unknown";
}

}  // namespace mpm
