#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geotweet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. line_no is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line_no, const std::string& what)
      : Error(line_no ? "line " + std::to_string(line_no) + ": " + what : what),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

// Well-formed record that fails a domain rule (e.g. missing user id).
class RejectError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (dimension mismatch, length mismatch, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace geotweet
