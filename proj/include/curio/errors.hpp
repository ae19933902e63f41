// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace curio {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input data (malformed files, broken records). CLI exit code 1.
class DataError : public Error {
public:
  using Error::Error;
};

/// Malformed line in a line-delimited file; carries the 1-based line number.
class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Uniqueness or cross-reference violation (duplicate ids, hash mismatch).
class IntegrityError : public DataError {
public:
  using DataError::DataError;
};

/// Invalid configuration detected before any work starts. CLI exit code 2.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

/// A metric cannot be evaluated on the given input (e.g. grid smaller than kernel).
class MetricError : public Error {
public:
  using Error::Error;
};

}  // namespace curio
