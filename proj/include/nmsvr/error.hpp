#pragma once

#include <stdexcept>
#include <string>

namespace nmsvr {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Config,    // invalid parameters, bad flags, schema mismatches
  Numeric,   // non-convergence, truncation leak, invariant violation
  Io,        // filesystem and parse failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

// Non-conformable operands (product, tensor, trace, feature lengths).
class DimensionError : public ConfigError {
 public:
  explicit DimensionError(const std::string& what) : ConfigError(what) {}
};

class SchemaError : public ConfigError {
 public:
  explicit SchemaError(const std::string& what) : ConfigError(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class InvariantViolation : public NumericError {
 public:
  explicit InvariantViolation(const std::string& what) : NumericError(what) {}
};

class TruncationLeak : public NumericError {
 public:
  explicit TruncationLeak(const std::string& what) : NumericError(what) {}
};

class NonConvergence : public NumericError {
 public:
  explicit NonConvergence(const std::string& what) : NumericError(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ParseError : public IoError {
 public:
  explicit ParseError(const std::string& what) : IoError(what) {}
};

class VersionError : public ParseError {
 public:
  explicit VersionError(const std::string& what) : ParseError(what) {}
};

}  // namespace nmsvr
