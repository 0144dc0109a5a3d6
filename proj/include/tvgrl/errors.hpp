#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvgrl {

// Base for every error raised by the library. CLI exit codes are derived from
// the concrete type: IoError -> 1, everything else -> 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations,
                  std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        violations_(std::move(violations)),
        line_(line) {}
  const std::vector<std::string>& violations() const { return violations_; }
  std::size_t line() const { return line_; }

 private:
  std::vector<std::string> violations_;
  std::size_t line_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvgrl
