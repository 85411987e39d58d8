#pragma once

#include <stdexcept>
#include <string>

namespace easiernet {

enum class ErrorKind {
  ContractViolation,
  DataError,
  DegenerateModel,
  StepSizeUnderflow,
  IoError,
};

/// Base class for every error raised by the core library. The kind maps
/// one-to-one onto the status codes of the C interface.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(ErrorKind::ContractViolation, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::DataError, what) {}
};

class DegenerateModel : public Error {
 public:
  explicit DegenerateModel(const std::string& what) : Error(ErrorKind::DegenerateModel, what) {}
};

class StepSizeUnderflow : public Error {
 public:
  explicit StepSizeUnderflow(const std::string& what) : Error(ErrorKind::StepSizeUnderflow, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::IoError, what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace easiernet
