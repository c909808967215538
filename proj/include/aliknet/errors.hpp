#pragma once

#include <stdexcept>
#include <string>

namespace aliknet {

// Base class for all library errors. Every error carries a short category
// tag so the CLI can emit one machine-parsable line per failure.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

private:
  std::string category_;
};

// Operand shapes are incompatible (names both shapes in the message).
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

// A configuration value or combination of values is invalid.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

// A serialized file is malformed; message includes the byte offset when known.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

// A numerical routine failed to converge or produced non-finite values.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

// Filesystem problem: missing file, unwritable directory, short read.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace aliknet
