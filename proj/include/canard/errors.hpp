#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace canard {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

/// Failures of the mathematics (no intersection, no convergence, ...).
/// The CLI maps these to exit code 1.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Bad input: config, expressions, flags. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

#define CANARD_DEFINE_ERROR(Name, Base)                          \
  class Name : public Base {                                     \
   public:                                                       \
    using Base::Base;                                            \
    const char* kind() const noexcept override { return #Name; } \
  };

class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : InputError(message + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "ParseError"; }

 private:
  std::size_t offset_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(std::string name, std::size_t offset)
      : ParseError("unknown identifier '" + name + "'", offset), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }
  const char* kind() const noexcept override { return "UnknownIdentifier"; }

 private:
  std::string name_;
};

CANARD_DEFINE_ERROR(ConfigError, InputError)
CANARD_DEFINE_ERROR(MissingBinding, InputError)
CANARD_DEFINE_ERROR(NumericError, DomainError)
CANARD_DEFINE_ERROR(IntegrationError, DomainError)
CANARD_DEFINE_ERROR(NoIntersection, DomainError)
CANARD_DEFINE_ERROR(DegenerateTangency, DomainError)
CANARD_DEFINE_ERROR(ChartOutOfRange, DomainError)
CANARD_DEFINE_ERROR(NoConvergence, DomainError)
CANARD_DEFINE_ERROR(NoCrossing, DomainError)
CANARD_DEFINE_ERROR(ZeroOnBoundary, DomainError)
CANARD_DEFINE_ERROR(RefinementExhausted, DomainError)
CANARD_DEFINE_ERROR(DegreeZero, DomainError)
CANARD_DEFINE_ERROR(BadBracket, DomainError)

#undef CANARD_DEFINE_ERROR

}  // namespace canard
