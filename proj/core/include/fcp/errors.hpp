#pragma once

#include <stdexcept>
#include <string>

namespace fcp {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes (ConfigError -> 2, everything else -> 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (role mismatch, token out of
// vocabulary, eval/train overlap, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class MalformedContext : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Conditioning on a feedback string whose marginal probability is exactly 0.
class OutOfSupport : public Error {
 public:
  using Error::Error;
};

class VerificationFailure : public Error {
 public:
  using Error::Error;
};

class TrainingAborted : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Upstream pipeline artifact is absent; reported by the CLI with exit code 2.
class MissingArtifact : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace fcp
