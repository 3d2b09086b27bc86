#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace liabval {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

// Cycles, orphans, leaves before the horizon, missing children.
class StructuralError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "structural"; }
};

// Values missing or shaped inconsistently with the tree.
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> details)
      : Error(what), details_(std::move(details)) {}
  const char* kind() const noexcept override { return "validation"; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::vector<std::string> details_;
};

// A stopping rule that looks into the future.
class MeasurabilityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "measurability"; }
};

// Enumeration / nesting guards exceeded.
class GuardError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "guard"; }
};

class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<std::string> details = {})
      : Error(what), details_(std::move(details)) {}
  const char* kind() const noexcept override { return "degeneracy"; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::vector<std::string> details_;
};

class ModelError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "model"; }
};

}  // namespace liabval
