#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace embir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid options, unknown formats, bad parameter values. Maps to CLI exit 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data (malformed files, duplicate ids, corrupt index). Maps to CLI exit 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class IngestError : public DataError {
 public:
  using DataError::DataError;
};

/// A parse failure tied to a location in a text file.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::uint64_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

/// Raised when an index is queried under an analyzer it was not built with.
class FingerprintError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace embir
