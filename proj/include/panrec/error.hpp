#pragma once

#include <stdexcept>
#include <string>

namespace panrec {

enum class ErrorKind {
  InvalidArgument,
  ContractViolation,
  Capacity,
  BehindCamera,
  UndefinedIoU,
  Io,
};

const char* to_string(ErrorKind kind);

/// Base for every error raised by the library. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error(ErrorKind::InvalidArgument, message) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error(ErrorKind::ContractViolation, message) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& message)
      : Error(ErrorKind::Capacity, message) {}
};

class BehindCamera : public Error {
 public:
  explicit BehindCamera(const std::string& message)
      : Error(ErrorKind::BehindCamera, message) {}
};

class UndefinedIoU : public Error {
 public:
  explicit UndefinedIoU(const std::string& message)
      : Error(ErrorKind::UndefinedIoU, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

}  // namespace panrec
